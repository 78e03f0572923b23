#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "rotdef/cli.hpp"
#include "rotdef/lenet.hpp"
#include "rotdef/mnist.hpp"
#include "rotdef/synth.hpp"

using namespace rotdef;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"rotdef"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("help exits zero") {
    CHECK(run({"--help"}) == 0);
    CHECK(run({"train", "--help"}) == 0);
    CHECK(run({"experiment", "--help"}) == 0);
}

TEST_CASE("usage errors exit two") {
    CHECK(run({}) == 2);
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"train", "--no-such-flag"}) == 2);
    CHECK(run({"eval", "--data", "/tmp"}) == 2);  // missing --checkpoint
}

TEST_CASE("runtime failures exit one with a diagnostic") {
    CHECK(run({"defend", "--checkpoint", "/nonexistent/model.ckpt", "--image", "/nonexistent/img",
               "--true-label", "1"}) == 1);
    CHECK(run({"eval", "--data", "/nonexistent", "--checkpoint", "/nonexistent/model.ckpt"}) == 1);
    CHECK(run({"experiment", "--config", "/nonexistent/config"}) == 1);
}

TEST_CASE("defend runs against a checkpoint and an idx image file") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "rotdef_cli_test";
    std::filesystem::create_directories(dir);
    const std::string ckpt = (dir / "model.ckpt").string();
    save_checkpoint(build_model(1), ckpt);

    const SynthSet set = generate_synth_digits(1, 2);
    const std::string image_path = (dir / "image.idx").string();
    write_file_bytes(image_path, serialize_idx_images({set.grids[0]}));

    const std::string out_csv = (dir / "sweep.csv").string();
    CHECK(run({"defend", "--checkpoint", ckpt, "--image", image_path, "--true-label",
               std::to_string(set.labels[0]), "--angle-max", "10", "--out", out_csv}) == 0);
    CHECK(std::filesystem::exists(out_csv));
    std::filesystem::remove_all(dir);
}

TEST_CASE("attack rejects an out-of-range test index") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "rotdef_cli_atk";
    std::filesystem::create_directories(dir);
    const std::string ckpt = (dir / "model.ckpt").string();
    save_checkpoint(build_model(1), ckpt);
    write_synth_dataset(dir.string(), 4, 4, 3);

    CHECK(run({"attack", "--data", dir.string(), "--checkpoint", ckpt, "--target", "8",
               "--index", "100"}) == 1);
    std::filesystem::remove_all(dir);
}
