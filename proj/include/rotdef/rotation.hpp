#pragma once

#include <utility>
#include <vector>

#include "rotdef/lenet.hpp"
#include "rotdef/mnist.hpp"
#include "rotdef/ops.hpp"

namespace rotdef {

struct RotationConfig {
    int angle_min = 0;   // degrees, inclusive
    int angle_max = 90;  // degrees, inclusive
    int angle_step = 1;
    double fill_value = 0.0;  // for samples falling outside the source frame
};

struct SweepRecord {
    std::vector<int> angles;
    std::vector<ProbVector> curves;  // class probabilities per angle
    int best_angle = 0;              // maximizes true-class confidence, smallest angle on ties
    double best_confidence = 0.0;
    bool recovered = false;  // argmax class at best_angle equals the true class
};

/// Counterclockwise rotation about the image center ((n-1)/2, (n-1)/2) by
/// inverse mapping with bilinear interpolation; out-of-frame samples read as
/// fill_value. 0 degrees is the exact identity.
Image rotate(const Image& image, double angle_degrees, double fill_value = 0.0);

/// Classifies every rotation on the configured angle grid.
SweepRecord sweep(const Model& model, const Image& image, int true_class,
                  const RotationConfig& config);

/// Rotation defense: (recovered, full sweep record).
std::pair<bool, SweepRecord> defend(const Model& model, const Image& adversarial_image,
                                    int true_class, const RotationConfig& config);

}  // namespace rotdef
