#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "rotdef/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic digit dataset in MNIST IDX layout"};
    std::string out_dir;
    std::size_t train_count = 60000;
    std::size_t test_count = 10000;
    std::uint64_t seed = 7;
    bool skip_existing = false;
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--train", train_count, "Training image count");
    app.add_option("--test", test_count, "Test image count");
    app.add_option("--seed", seed, "Generator seed");
    app.add_flag("--skip-existing", skip_existing,
                 "Do nothing if the output files already exist");
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        if (skip_existing && std::filesystem::exists(out_dir + "/train-images-idx3-ubyte") &&
            std::filesystem::exists(out_dir + "/t10k-images-idx3-ubyte")) {
            std::printf("dataset in %s already exists, skipping\n", out_dir.c_str());
            return 0;
        }
        rotdef::write_synth_dataset(out_dir, train_count, test_count, seed);
        std::printf("wrote %zu train / %zu test images to %s\n", train_count, test_count,
                    out_dir.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
