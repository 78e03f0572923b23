#include "rotdef/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rotdef/experiment.hpp"
#include "rotdef/fgsm.hpp"
#include "rotdef/lenet.hpp"
#include "rotdef/mnist.hpp"
#include "rotdef/rng.hpp"
#include "rotdef/rotation.hpp"

namespace rotdef {

namespace {

LabeledDataset load_test_set(const std::string& data_dir, const MnistFileNames& names) {
    const std::string sep = data_dir.empty() || data_dir.back() == '/' ? "" : "/";
    return load_dataset(data_dir + sep + names.test_images, data_dir + sep + names.test_labels,
                        "test");
}

int cmd_train(const std::string& data_dir, const MnistFileNames& names,
              const std::string& out_path, const TrainConfig& config, std::uint64_t split_seed,
              bool skip_existing) {
    if (skip_existing && std::filesystem::exists(out_path)) {
        std::printf("checkpoint %s already exists, skipping training\n", out_path.c_str());
        return 0;
    }
    const MnistData data = load_mnist(data_dir, split_seed, names);
    std::printf("loaded %zu train / %zu validation / %zu test images\n", data.train.size(),
                data.validation.size(), data.test.size());
    Model model = build_model(config.seed);
    std::printf("model parameters: %zu\n", model.parameter_count());
    train(model, data.train, data.validation, config, [](const EpochStats& s) {
        std::printf("epoch %d: train_loss %.4f val_acc %.4f\n", s.epoch, s.mean_train_loss,
                    s.validation_accuracy);
        std::fflush(stdout);
    });
    save_checkpoint(model, out_path);
    std::printf("test_accuracy %.4f\n", evaluate_accuracy(model, data.test));
    std::printf("saved checkpoint to %s\n", out_path.c_str());
    return 0;
}

int cmd_eval(const std::string& data_dir, const MnistFileNames& names,
             const std::string& checkpoint) {
    const Model model = load_checkpoint(checkpoint);
    const LabeledDataset test = load_test_set(data_dir, names);
    std::printf("test_accuracy %.4f\n", evaluate_accuracy(model, test));
    return 0;
}

int cmd_attack(const std::string& data_dir, const MnistFileNames& names,
               const std::string& checkpoint, long index, int source_class, std::uint64_t seed,
               const AttackConfig& config, const std::string& out_image,
               const std::string& out_trace) {
    const Model model = load_checkpoint(checkpoint);
    const LabeledDataset test = load_test_set(data_dir, names);

    std::size_t chosen = 0;
    if (index >= 0) {
        if (static_cast<std::size_t>(index) >= test.size()) {
            throw ValidationError("attack: index " + std::to_string(index) +
                                  " outside test set of size " + std::to_string(test.size()));
        }
        chosen = static_cast<std::size_t>(index);
    } else {
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (test.labels[i] == source_class &&
                predict(model, test.images[i]) == source_class) {
                eligible.push_back(i);
            }
        }
        if (eligible.empty()) {
            throw ValidationError("attack: no correctly-classified test image of class " +
                                  std::to_string(source_class));
        }
        std::mt19937_64 rng(seed);
        chosen = eligible[static_cast<std::size_t>(uniform_index(rng, eligible.size()))];
    }

    const Image& clean = test.images[chosen];
    const AttackResult result = craft_targeted(model, clean, config);
    std::printf("image_index %zu true_label %d predicted %d target %d\n", chosen,
                test.labels[chosen], result.source_class, result.target_class);
    std::printf("success %s final_target_conf %.4f final_true_conf %.4f\n",
                result.success ? "true" : "false", result.trace.back().target_conf,
                result.trace.back().true_conf);
    std::printf("l0 %zu l2 %.6f linf %.6f\n", result.metrics.l0, result.metrics.l2,
                result.metrics.linf);

    if (!out_image.empty()) {
        RawGrid grid{};
        for (std::size_t i = 0; i < kImagePixels; ++i) {
            grid[i] = static_cast<std::uint8_t>(
                std::lround(result.adversarial.pixels[i] * 255.0));
        }
        write_file_bytes(out_image, serialize_idx_images({grid}));
        std::printf("wrote adversarial image to %s\n", out_image.c_str());
    }
    if (!out_trace.empty()) {
        std::ofstream out(out_trace, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + out_trace + " for writing");
        out << "iteration,target_conf,true_conf\n";
        char buf[80];
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", i + 1,
                          result.trace[i].target_conf, result.trace[i].true_conf);
            out << buf;
        }
        std::printf("wrote confidence trace to %s\n", out_trace.c_str());
    }
    return 0;
}

int cmd_defend(const std::string& checkpoint, const std::string& image_path, int true_label,
               const RotationConfig& config, const std::string& out_csv) {
    const Model model = load_checkpoint(checkpoint);
    const std::vector<RawGrid> grids = parse_idx_images(read_file_bytes(image_path));
    if (grids.empty()) {
        throw ValidationError("defend: image file " + image_path + " holds no images");
    }
    const Image image = normalize(grids.front());
    auto [recovered, record] = defend(model, image, true_label, config);
    std::printf("best_angle %d best_confidence %.4f recovered %s\n", record.best_angle,
                record.best_confidence, recovered ? "true" : "false");
    if (!out_csv.empty()) {
        emit_sweep_csv(record, out_csv);
        std::printf("wrote sweep to %s\n", out_csv.c_str());
    }
    return 0;
}

int cmd_experiment(const std::string& config_path) {
    const ExperimentConfig config = parse_experiment_config(config_path);
    if (config.output_dir.empty()) {
        throw ValidationError("experiment: output_dir is required");
    }
    const ExperimentOutput output = run_experiment(config);
    write_experiment_outputs(output, config.output_dir);
    std::printf("%s", format_summary(output.summary).c_str());
    std::printf("wrote %zu records to %s\n", output.records.size(), config.output_dir.c_str());
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"MNIST-format digit classifier, targeted FGSM attacks, and a "
                 "rotation-based recovery sweep"};
    app.require_subcommand(1);

    MnistFileNames names;

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the classifier and save a checkpoint");
    std::string train_data, train_out = "model.ckpt";
    TrainConfig train_config;
    std::uint64_t split_seed = 42;
    bool skip_existing = false;
    train_cmd->add_option("--data", train_data, "Directory with the IDX data files")->required();
    train_cmd->add_option("--train-images", names.train_images, "Training image file name");
    train_cmd->add_option("--train-labels", names.train_labels, "Training label file name");
    train_cmd->add_option("--test-images", names.test_images, "Test image file name");
    train_cmd->add_option("--test-labels", names.test_labels, "Test label file name");
    train_cmd->add_option("--out", train_out, "Checkpoint output path");
    train_cmd->add_option("--epochs", train_config.epochs, "Training epochs");
    train_cmd->add_option("--batch-size", train_config.batch_size, "Minibatch size");
    train_cmd->add_option("--learning-rate", train_config.learning_rate, "SGD learning rate");
    train_cmd->add_option("--seed", train_config.seed, "Init and shuffle seed");
    train_cmd->add_option("--val-target", train_config.validation_target_accuracy,
                          "Stop once validation accuracy reaches this");
    train_cmd->add_option("--split-seed", split_seed, "Train/validation split seed");
    train_cmd->add_flag("--skip-existing", skip_existing,
                        "Do nothing if the checkpoint file already exists");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Report test-set accuracy of a checkpoint");
    std::string eval_data, eval_checkpoint;
    eval_cmd->add_option("--data", eval_data, "Directory with the IDX data files")->required();
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
    eval_cmd->add_option("--test-images", names.test_images, "Test image file name");
    eval_cmd->add_option("--test-labels", names.test_labels, "Test label file name");

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "Craft a targeted adversarial example");
    std::string attack_data, attack_checkpoint, attack_out_image, attack_out_trace;
    AttackConfig attack_config;
    long attack_index = -1;
    int attack_source = -1;
    std::uint64_t attack_seed = 42;
    attack_cmd->add_option("--data", attack_data, "Directory with the IDX data files")->required();
    attack_cmd->add_option("--checkpoint", attack_checkpoint, "Checkpoint path")->required();
    attack_cmd->add_option("--target", attack_config.target_class, "Target class")->required();
    attack_cmd->add_option("--index", attack_index, "Test image index to attack");
    attack_cmd->add_option("--source-class", attack_source,
                           "Sample a correctly-classified image of this class instead");
    attack_cmd->add_option("--seed", attack_seed, "Sampling seed for --source-class");
    attack_cmd->add_option("--iterations", attack_config.iterations, "Attack iterations");
    attack_cmd->add_option("--step", attack_config.epsilon_step, "Per-iteration step size");
    attack_cmd->add_option("--out-image", attack_out_image,
                           "Write the adversarial image as a single-image IDX file");
    attack_cmd->add_option("--out-trace", attack_out_trace,
                           "Write the per-iteration confidence trace CSV");
    attack_cmd->add_option("--test-images", names.test_images, "Test image file name");
    attack_cmd->add_option("--test-labels", names.test_labels, "Test label file name");

    // defend
    auto* defend_cmd = app.add_subcommand("defend", "Rotation sweep over an image file");
    std::string defend_checkpoint, defend_image, defend_out;
    RotationConfig defend_config;
    int defend_label = 0;
    defend_cmd->add_option("--checkpoint", defend_checkpoint, "Checkpoint path")->required();
    defend_cmd->add_option("--image", defend_image, "IDX image file (first image is used)")
        ->required();
    defend_cmd->add_option("--true-label", defend_label, "True class of the image")->required();
    defend_cmd->add_option("--angle-min", defend_config.angle_min, "Sweep start, degrees");
    defend_cmd->add_option("--angle-max", defend_config.angle_max, "Sweep end, degrees");
    defend_cmd->add_option("--angle-step", defend_config.angle_step, "Sweep step, degrees");
    defend_cmd->add_option("--out", defend_out, "Sweep CSV output path");

    // experiment
    auto* experiment_cmd =
        app.add_subcommand("experiment", "Full attack + defense run from a config file");
    std::string experiment_config;
    experiment_cmd->add_option("--config", experiment_config, "key = value config file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(train_data, names, train_out, train_config, split_seed,
                             skip_existing);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_data, names, eval_checkpoint);
        }
        if (attack_cmd->parsed()) {
            if (attack_index < 0 && attack_source < 0) {
                throw ValidationError("attack: provide --index or --source-class");
            }
            return cmd_attack(attack_data, names, attack_checkpoint, attack_index, attack_source,
                              attack_seed, attack_config, attack_out_image, attack_out_trace);
        }
        if (defend_cmd->parsed()) {
            return cmd_defend(defend_checkpoint, defend_image, defend_label, defend_config,
                              defend_out);
        }
        if (experiment_cmd->parsed()) {
            return cmd_experiment(experiment_config);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

}  // namespace rotdef
