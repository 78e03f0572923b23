#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rotdef/mnist.hpp"

namespace rotdef {

// Procedural stand-in for handwritten digit data: each sample renders a digit
// skeleton (polyline strokes) with per-sample jitter, rotation, shear, scale,
// translation, stroke width and brightness variation, anti-aliased into a
// 28x28 grayscale grid. Output is byte compatible with the MNIST IDX files.

struct SynthSet {
    std::vector<RawGrid> grids;
    std::vector<int> labels;
};

/// Deterministic for a fixed seed.
SynthSet generate_synth_digits(std::size_t count, std::uint64_t seed);

/// Renders one digit with explicit style parameters (used by tests).
RawGrid render_digit(int digit, std::uint64_t style_seed);

/// Writes train-images/train-labels/t10k-images/t10k-labels IDX files into dir.
void write_synth_dataset(const std::string& dir, std::size_t train_count, std::size_t test_count,
                         std::uint64_t seed);

}  // namespace rotdef
