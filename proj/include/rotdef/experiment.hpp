#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rotdef/fgsm.hpp"
#include "rotdef/lenet.hpp"
#include "rotdef/mnist.hpp"
#include "rotdef/rotation.hpp"

namespace rotdef {

struct ExperimentConfig {
    std::uint64_t seed = 42;
    int source_class = 1;
    int target_class = 8;
    int sample_count = 10;
    AttackConfig attack;      // target_class is mirrored from above
    RotationConfig rotation;
    std::string data_dir;
    std::string checkpoint_path;
    std::string output_dir;
    MnistFileNames file_names;  // only the test pair is consulted
};

/// Parses a flat `key = value` file (UTF-8, '#' comments). Unknown keys are a
/// validation error listing the offenders.
ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config_text(const std::string& text);

/// One attacked-and-defended test image. Confidences are percentages rounded
/// to one decimal, so changing_rate is exact in terms of its two operands.
struct ExperimentRecord {
    std::size_t image_index = 0;  // index into the test set
    int true_label = 0;
    int target_label = 0;
    double orig_conf = 0.0;        // true-class confidence on the clean image
    double adv_conf_target = 0.0;  // target-class confidence on the adversarial image
    double adv_conf_true = 0.0;    // true-class confidence on the adversarial image
    int best_angle = 0;
    double rot_conf_true = 0.0;  // true-class confidence at best_angle
    double changing_rate = 0.0;  // orig_conf - rot_conf_true, signed
    bool recovered = false;
};

struct ExperimentSummary {
    double recovery_rate = 0.0;
    double mean_best_angle = 0.0;
    double mean_changing_rate = 0.0;
};

struct ExperimentOutput {
    std::vector<ExperimentRecord> records;
    std::vector<SweepRecord> sweeps;  // parallel to records
    ExperimentSummary summary;
};

/// Samples correctly-classified test images of source_class, attacks each
/// toward target_class, and sweeps the rotation defense over each result.
ExperimentOutput run_experiment(const ExperimentConfig& config, const Model& model,
                                const LabeledDataset& test_set);

/// Loads the checkpoint and test set from the configured paths first.
ExperimentOutput run_experiment(const ExperimentConfig& config);

void emit_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
void emit_sweep_csv(const SweepRecord& record, const std::string& path);

/// records.csv, sweep_<image_index>.csv per record, and summary.txt.
void write_experiment_outputs(const ExperimentOutput& output, const std::string& output_dir);

std::string format_summary(const ExperimentSummary& summary);

}  // namespace rotdef
