#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <set>

#include "rotdef/mnist.hpp"
#include "rotdef/synth.hpp"
#include "testutil.hpp"

using namespace rotdef;

namespace {

std::vector<std::uint8_t> image_file_bytes(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<RawGrid> grids(count);
    for (RawGrid& g : grids)
        for (std::uint8_t& b : g) b = static_cast<std::uint8_t>(rng() & 0xff);
    return serialize_idx_images(grids);
}

}  // namespace

TEST_CASE("idx image parsing round trips and honors the header") {
    const std::vector<std::uint8_t> bytes = image_file_bytes(5, 1);
    const std::vector<RawGrid> grids = parse_idx_images(bytes);
    REQUIRE(grids.size() == 5);
    CHECK(serialize_idx_images(grids) == bytes);
}

TEST_CASE("idx image parsing rejects bad magic and truncation") {
    std::vector<std::uint8_t> bytes = image_file_bytes(3, 2);
    std::vector<std::uint8_t> bad_magic = bytes;
    bad_magic[3] = 0x01;
    CHECK_THROWS_AS(parse_idx_images(bad_magic), FormatError);

    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 16 + 2 * 784 + 100);
    const std::string msg =
        test::thrown_message<TruncationError>([&] { parse_idx_images(truncated); });
    CHECK(msg.find(std::to_string(16 + 3 * 784)) != std::string::npos);
    CHECK(msg.find(std::to_string(truncated.size())) != std::string::npos);

    std::vector<std::uint8_t> header_only(bytes.begin(), bytes.begin() + 10);
    CHECK_THROWS_AS(parse_idx_images(header_only), TruncationError);

    // wrong grid size in the header
    std::vector<std::uint8_t> wrong_grid = bytes;
    wrong_grid[11] = 27;
    CHECK_THROWS_AS(parse_idx_images(wrong_grid), FormatError);
}

TEST_CASE("idx label parsing") {
    const std::vector<int> labels = {7, 2, 1, 0, 4, 1, 4, 9, 5, 9};
    const std::vector<std::uint8_t> bytes = serialize_idx_labels(labels);
    CHECK(parse_idx_labels(bytes) == labels);

    std::vector<std::uint8_t> bad_magic = bytes;
    bad_magic[3] = 0x42;
    CHECK_THROWS_AS(parse_idx_labels(bad_magic), FormatError);

    std::vector<std::uint8_t> bad_value = bytes;
    bad_value[8 + 3] = 12;
    const std::string msg =
        test::thrown_message<ValueError>([&] { parse_idx_labels(bad_value); });
    CHECK(msg.find("12") != std::string::npos);
    CHECK(msg.find("index 3") != std::string::npos);

    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 4);
    CHECK_THROWS_AS(parse_idx_labels(truncated), TruncationError);
}

TEST_CASE("normalize maps bytes onto [0,1]") {
    RawGrid grid{};
    grid[0] = 0;
    grid[1] = 255;
    grid[2] = 128;
    const Image img = normalize(grid);
    CHECK(img.pixels[0] == 0.0);
    CHECK(img.pixels[1] == 1.0);
    CHECK(img.pixels[2] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
    for (double p : img.pixels) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("train/validation split is a seeded disjoint partition") {
    LabeledDataset full;
    full.split_name = "train-file";
    full.images.resize(60000);
    full.labels.resize(60000);
    for (std::size_t i = 0; i < full.size(); ++i) {
        full.labels[i] = static_cast<int>(i % 10);
        full.images[i].pixels[0] = static_cast<double>(i);  // identity tag
    }

    auto [train, validation] = split_train_validation(full, 42);
    CHECK(train.size() == 50000);
    CHECK(validation.size() == 10000);
    CHECK(train.split_name == "train");
    CHECK(validation.split_name == "validation");

    std::set<long> seen;
    for (const Image& img : train.images) seen.insert(std::lround(img.pixels[0]));
    for (const Image& img : validation.images) seen.insert(std::lround(img.pixels[0]));
    CHECK(seen.size() == 60000);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 59999);

    auto [train2, validation2] = split_train_validation(full, 42);
    CHECK(train.images == train2.images);
    CHECK(validation.labels == validation2.labels);

    auto [train3, validation3] = split_train_validation(full, 43);
    CHECK(train.images != train3.images);

    full.images.pop_back();
    full.labels.pop_back();
    CHECK_THROWS_AS(split_train_validation(full, 42), ValidationError);
}

TEST_CASE("generated dataset loads through the idx pipeline intact") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "rotdef_mnist_test";
    std::filesystem::create_directories(dir);
    write_synth_dataset(dir.string(), 64, 32, 9);

    const LabeledDataset test = load_dataset((dir / "t10k-images-idx3-ubyte").string(),
                                             (dir / "t10k-labels-idx1-ubyte").string(), "test");
    CHECK(test.size() == 32);
    for (const Image& img : test.images) {
        for (double p : img.pixels) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
    for (int label : test.labels) {
        CHECK(label >= 0);
        CHECK(label <= 9);
    }
    std::filesystem::remove_all(dir);
}

// Checks that only make sense against the real MNIST distribution; they run
// when ROTDEF_MNIST_DIR points at the standard four files.
TEST_CASE("real MNIST spot checks") {
    const char* dir = std::getenv("ROTDEF_MNIST_DIR");
    if (dir == nullptr) {
        MESSAGE("ROTDEF_MNIST_DIR not set; skipping");
        return;
    }
    const MnistFileNames names;
    const std::string base = std::string(dir) + "/";
    const std::vector<RawGrid> images = parse_idx_images(read_file_bytes(base + names.test_images));
    const std::vector<int> labels = parse_idx_labels(read_file_bytes(base + names.test_labels));
    CHECK(images.size() == 10000);
    CHECK(labels.size() == 10000);
    CHECK(labels[0] == 7);

    std::array<int, 10> histogram{};
    for (int l : labels) ++histogram[static_cast<std::size_t>(l)];
    for (int count : histogram) CHECK(count > 0);
}
