#include "rotdef/mnist.hpp"

#include <cstring>
#include <fstream>
#include <utility>

#include "rotdef/rng.hpp"

namespace rotdef {

namespace {

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

std::vector<RawGrid> parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    constexpr std::size_t kHeader = 16;
    if (bytes.size() < kHeader) {
        throw TruncationError("idx images: header needs 16 bytes, file has " +
                              std::to_string(bytes.size()));
    }
    const std::uint32_t magic = read_u32_be(bytes.data());
    if (magic != kIdxImageMagic) {
        throw FormatError("idx images: bad magic " + std::to_string(magic) + ", expected " +
                          std::to_string(kIdxImageMagic));
    }
    const std::uint32_t count = read_u32_be(bytes.data() + 4);
    const std::uint32_t rows = read_u32_be(bytes.data() + 8);
    const std::uint32_t cols = read_u32_be(bytes.data() + 12);
    if (rows != kImageRows || cols != kImageCols) {
        throw FormatError("idx images: grid is " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", expected 28x28");
    }
    const std::size_t expected = kHeader + static_cast<std::size_t>(count) * kImagePixels;
    if (bytes.size() < expected) {
        throw TruncationError("idx images: header promises " + std::to_string(expected) +
                              " bytes, file has " + std::to_string(bytes.size()));
    }
    std::vector<RawGrid> grids(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::memcpy(grids[i].data(), bytes.data() + kHeader + i * kImagePixels, kImagePixels);
    }
    return grids;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    constexpr std::size_t kHeader = 8;
    if (bytes.size() < kHeader) {
        throw TruncationError("idx labels: header needs 8 bytes, file has " +
                              std::to_string(bytes.size()));
    }
    const std::uint32_t magic = read_u32_be(bytes.data());
    if (magic != kIdxLabelMagic) {
        throw FormatError("idx labels: bad magic " + std::to_string(magic) + ", expected " +
                          std::to_string(kIdxLabelMagic));
    }
    const std::uint32_t count = read_u32_be(bytes.data() + 4);
    const std::size_t expected = kHeader + count;
    if (bytes.size() < expected) {
        throw TruncationError("idx labels: header promises " + std::to_string(expected) +
                              " bytes, file has " + std::to_string(bytes.size()));
    }
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t b = bytes[kHeader + i];
        if (b > 9) {
            throw ValueError("idx labels: value " + std::to_string(b) + " at index " +
                             std::to_string(i) + " outside 0..9");
        }
        labels[i] = b;
    }
    return labels;
}

std::vector<std::uint8_t> serialize_idx_images(const std::vector<RawGrid>& grids) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + grids.size() * kImagePixels);
    append_u32_be(out, kIdxImageMagic);
    append_u32_be(out, static_cast<std::uint32_t>(grids.size()));
    append_u32_be(out, kImageRows);
    append_u32_be(out, kImageCols);
    for (const RawGrid& g : grids) {
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    append_u32_be(out, kIdxLabelMagic);
    append_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        if (l < 0 || l > 9) {
            throw ValueError("idx labels: label " + std::to_string(l) + " outside 0..9");
        }
        out.push_back(static_cast<std::uint8_t>(l));
    }
    return out;
}

Image normalize(const RawGrid& grid) {
    Image img;
    for (std::size_t i = 0; i < kImagePixels; ++i) {
        img.pixels[i] = static_cast<double>(grid[i]) / 255.0;
    }
    return img;
}

Tensor to_tensor(const Image& image) {
    Tensor t = Tensor::zeros({1, kImageRows, kImageCols});
    std::copy(image.pixels.begin(), image.pixels.end(), t.data.begin());
    return t;
}

Image to_image(const Tensor& t) {
    if (t.size() != kImagePixels) {
        throw DimensionError("to_image: tensor shape " + shape_string(t.shape) +
                             " does not hold 28x28 pixels");
    }
    Image img;
    std::copy(t.data.begin(), t.data.end(), img.pixels.begin());
    return img;
}

std::pair<LabeledDataset, LabeledDataset> split_train_validation(LabeledDataset full,
                                                                 std::uint64_t seed) {
    constexpr std::size_t kTrain = 50000, kValidation = 10000;
    if (full.images.size() != kTrain + kValidation || full.labels.size() != full.images.size()) {
        throw ValidationError("split: expected 60000 labeled images, got " +
                              std::to_string(full.images.size()) + " images / " +
                              std::to_string(full.labels.size()) + " labels");
    }
    std::mt19937_64 rng(seed);
    const std::vector<std::size_t> order = shuffled_indices(full.images.size(), rng);

    LabeledDataset train, validation;
    train.split_name = "train";
    validation.split_name = "validation";
    train.images.reserve(kTrain);
    train.labels.reserve(kTrain);
    validation.images.reserve(kValidation);
    validation.labels.reserve(kValidation);
    for (std::size_t i = 0; i < kTrain; ++i) {
        train.images.push_back(full.images[order[i]]);
        train.labels.push_back(full.labels[order[i]]);
    }
    for (std::size_t i = kTrain; i < kTrain + kValidation; ++i) {
        validation.images.push_back(full.images[order[i]]);
        validation.labels.push_back(full.labels[order[i]]);
    }
    return {std::move(train), std::move(validation)};
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), len)) {
        throw IoError("cannot read " + path);
    }
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("cannot write " + path);
    }
}

LabeledDataset load_dataset(const std::string& images_path, const std::string& labels_path,
                            const std::string& split_name) {
    const std::vector<RawGrid> grids = parse_idx_images(read_file_bytes(images_path));
    std::vector<int> labels = parse_idx_labels(read_file_bytes(labels_path));
    if (grids.size() != labels.size()) {
        throw ValidationError(split_name + ": " + std::to_string(grids.size()) + " images but " +
                              std::to_string(labels.size()) + " labels");
    }
    LabeledDataset ds;
    ds.split_name = split_name;
    ds.images.reserve(grids.size());
    for (const RawGrid& g : grids) {
        ds.images.push_back(normalize(g));
    }
    ds.labels = std::move(labels);
    return ds;
}

MnistData load_mnist(const std::string& dir, std::uint64_t split_seed,
                     const MnistFileNames& names) {
    const std::string sep = dir.empty() || dir.back() == '/' ? "" : "/";
    LabeledDataset full =
        load_dataset(dir + sep + names.train_images, dir + sep + names.train_labels, "train-file");
    MnistData data;
    auto [train, validation] = split_train_validation(std::move(full), split_seed);
    data.train = std::move(train);
    data.validation = std::move(validation);
    data.test = load_dataset(dir + sep + names.test_images, dir + sep + names.test_labels, "test");
    return data;
}

}  // namespace rotdef
