#pragma once

#include <span>
#include <vector>

#include "rotdef/lenet.hpp"
#include "rotdef/mnist.hpp"
#include "rotdef/ops.hpp"

namespace rotdef {

struct AttackConfig {
    double epsilon_step = 0.01;
    int iterations = 20;
    int target_class = 0;
};

struct AttackTracePoint {
    double target_conf = 0.0;
    double true_conf = 0.0;
};

struct AttackResult {
    Image adversarial;
    std::vector<AttackTracePoint> trace;  // one entry per iteration
    PerturbationMetrics metrics;          // vs the original image
    bool success = false;                 // predict(adversarial) == target
    int source_class = -1;                // model's prediction on the clean input
    int target_class = -1;
};

/// One targeted step: x' = clip(x - eps * sign(d loss(x, target) / dx), 0, 1),
/// with sign(0) = 0.
Image fgsm_step(const Model& model, const Image& image, int target_class, double epsilon_step);

/// Iterated targeted attack with per-step clipping and confidence tracing.
/// The image must not already be classified as the target class.
AttackResult craft_targeted(const Model& model, const Image& image, const AttackConfig& config);

/// Attacks every image of a single-class slice, preserving order.
std::vector<AttackResult> batch_attack(const Model& model, std::span<const Image> images,
                                       std::span<const int> labels, const AttackConfig& config);

}  // namespace rotdef
