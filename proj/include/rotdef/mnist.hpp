#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rotdef/ops.hpp"
#include "rotdef/tensor.hpp"

namespace rotdef {

inline constexpr std::size_t kImageRows = 28;
inline constexpr std::size_t kImageCols = 28;
inline constexpr std::size_t kImagePixels = kImageRows * kImageCols;

/// 28x28 grayscale image with intensities in [0,1].
struct Image {
    std::array<double, kImagePixels> pixels{};

    double& at(std::size_t row, std::size_t col) { return pixels[row * kImageCols + col]; }
    double at(std::size_t row, std::size_t col) const { return pixels[row * kImageCols + col]; }

    bool operator==(const Image& other) const { return pixels == other.pixels; }
};

using RawGrid = std::array<std::uint8_t, kImagePixels>;

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<int> labels;
    std::string split_name;

    std::size_t size() const { return images.size(); }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses an IDX image container: big-endian magic 0x00000803, count, rows, cols,
/// then count*rows*cols pixel bytes. Only 28x28 grids are accepted.
std::vector<RawGrid> parse_idx_images(const std::vector<std::uint8_t>& bytes);

/// Parses an IDX label container: big-endian magic 0x00000801, count, then count
/// label bytes each in 0..9.
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> serialize_idx_images(const std::vector<RawGrid>& grids);
std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels);

/// pixel = byte / 255.
Image normalize(const RawGrid& grid);

Tensor to_tensor(const Image& image);  // shape [1,28,28]
Image to_image(const Tensor& t);       // accepts [1,28,28] or [28,28]

inline PerturbationMetrics lp_metrics(const Image& a, const Image& b) {
    return lp_metrics(to_tensor(a), to_tensor(b));
}

/// Deterministic seeded partition of the 60000-entry training file into
/// 50000 train / 10000 validation images.
std::pair<LabeledDataset, LabeledDataset> split_train_validation(LabeledDataset full,
                                                                 std::uint64_t seed);

struct MnistFileNames {
    std::string train_images = "train-images-idx3-ubyte";
    std::string train_labels = "train-labels-idx1-ubyte";
    std::string test_images = "t10k-images-idx3-ubyte";
    std::string test_labels = "t10k-labels-idx1-ubyte";
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

/// Loads one image/label file pair into a normalized dataset.
LabeledDataset load_dataset(const std::string& images_path, const std::string& labels_path,
                            const std::string& split_name);

struct MnistData {
    LabeledDataset train;       // 50000 after split
    LabeledDataset validation;  // 10000 after split
    LabeledDataset test;        // 10000
};

/// Loads the four standard files from `dir` and applies the seeded train/validation split.
MnistData load_mnist(const std::string& dir, std::uint64_t split_seed,
                     const MnistFileNames& names = {});

}  // namespace rotdef
