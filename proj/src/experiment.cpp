#include "rotdef/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rotdef/rng.hpp"

namespace rotdef {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw ValidationError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
    if (used != value.size()) {
        throw ValidationError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
    return v;
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ValidationError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
    if (used != value.size()) {
        throw ValidationError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
    return v;
}

void validate(const ExperimentConfig& config) {
    auto class_ok = [](int c) { return c >= 0 && c < static_cast<int>(kNumClasses); };
    if (!class_ok(config.source_class) || !class_ok(config.target_class)) {
        throw ValidationError("experiment: classes must be in 0..9");
    }
    if (config.source_class == config.target_class) {
        throw ValidationError("experiment: source_class and target_class must differ");
    }
    if (config.sample_count < 1) {
        throw ValidationError("experiment: sample_count must be >= 1");
    }
}

double percent_1dp(double probability) {
    return std::round(probability * 1000.0) / 10.0;
}

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text) {
    ExperimentConfig config;
    std::vector<std::string> unknown;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "source_class") {
            config.source_class = static_cast<int>(parse_int(key, value));
        } else if (key == "target_class") {
            config.target_class = static_cast<int>(parse_int(key, value));
        } else if (key == "sample_count") {
            config.sample_count = static_cast<int>(parse_int(key, value));
        } else if (key == "epsilon_step") {
            config.attack.epsilon_step = parse_real(key, value);
        } else if (key == "iterations") {
            config.attack.iterations = static_cast<int>(parse_int(key, value));
        } else if (key == "angle_min") {
            config.rotation.angle_min = static_cast<int>(parse_int(key, value));
        } else if (key == "angle_max") {
            config.rotation.angle_max = static_cast<int>(parse_int(key, value));
        } else if (key == "angle_step") {
            config.rotation.angle_step = static_cast<int>(parse_int(key, value));
        } else if (key == "fill_value") {
            config.rotation.fill_value = parse_real(key, value);
        } else if (key == "interpolation") {
            if (value != "bilinear") {
                throw ValidationError("config: interpolation must be 'bilinear', got '" + value +
                                      "'");
            }
        } else if (key == "data_dir") {
            config.data_dir = value;
        } else if (key == "checkpoint") {
            config.checkpoint_path = value;
        } else if (key == "output_dir") {
            config.output_dir = value;
        } else if (key == "test_images") {
            config.file_names.test_images = value;
        } else if (key == "test_labels") {
            config.file_names.test_labels = value;
        } else {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "config: unknown keys:";
        for (const std::string& k : unknown) msg += " '" + k + "'";
        throw ValidationError(msg);
    }
    config.attack.target_class = config.target_class;
    validate(config);
    return config;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return parse_experiment_config_text(std::string(bytes.begin(), bytes.end()));
}

ExperimentOutput run_experiment(const ExperimentConfig& config, const Model& model,
                                const LabeledDataset& test_set) {
    validate(config);

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        if (test_set.labels[i] == config.source_class &&
            predict(model, test_set.images[i]) == config.source_class) {
            eligible.push_back(i);
        }
    }
    if (eligible.size() < static_cast<std::size_t>(config.sample_count)) {
        throw ValidationError("experiment: only " + std::to_string(eligible.size()) +
                              " eligible images of class " + std::to_string(config.source_class) +
                              ", need " + std::to_string(config.sample_count));
    }
    std::mt19937_64 rng(config.seed);
    shuffle_in_place(eligible, rng);
    eligible.resize(static_cast<std::size_t>(config.sample_count));

    ExperimentOutput out;
    double angle_sum = 0.0, changing_sum = 0.0;
    std::size_t recovered_count = 0;
    for (const std::size_t index : eligible) {
        const Image& clean = test_set.images[index];
        const AttackResult attack = craft_targeted(model, clean, config.attack);
        auto [recovered, record] =
            defend(model, attack.adversarial, config.source_class, config.rotation);

        ExperimentRecord row;
        row.image_index = index;
        row.true_label = config.source_class;
        row.target_label = config.target_class;
        const ProbVector clean_probs = predict_proba(model, clean);
        const ProbVector adv_probs = predict_proba(model, attack.adversarial);
        row.orig_conf = percent_1dp(clean_probs[static_cast<std::size_t>(config.source_class)]);
        row.adv_conf_target =
            percent_1dp(adv_probs[static_cast<std::size_t>(config.target_class)]);
        row.adv_conf_true = percent_1dp(adv_probs[static_cast<std::size_t>(config.source_class)]);
        row.best_angle = record.best_angle;
        row.rot_conf_true = percent_1dp(record.best_confidence);
        row.changing_rate = row.orig_conf - row.rot_conf_true;
        row.recovered = recovered;

        angle_sum += row.best_angle;
        changing_sum += row.changing_rate;
        if (recovered) ++recovered_count;
        out.records.push_back(row);
        out.sweeps.push_back(std::move(record));
    }

    const double n = static_cast<double>(out.records.size());
    out.summary.recovery_rate = static_cast<double>(recovered_count) / n;
    out.summary.mean_best_angle = angle_sum / n;
    out.summary.mean_changing_rate = changing_sum / n;
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    if (config.data_dir.empty() || config.checkpoint_path.empty()) {
        throw ValidationError("experiment: data_dir and checkpoint are required");
    }
    const Model model = load_checkpoint(config.checkpoint_path);
    const std::string sep = config.data_dir.back() == '/' ? "" : "/";
    const LabeledDataset test =
        load_dataset(config.data_dir + sep + config.file_names.test_images,
                     config.data_dir + sep + config.file_names.test_labels, "test");
    return run_experiment(config, model, test);
}

void emit_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out << "image_index,true_label,target_label,orig_conf,adv_conf_target,adv_conf_true,"
           "best_angle,rot_conf_true,changing_rate,recovered\n";
    char buf[160];
    for (const ExperimentRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.1f,%.1f,%.1f,%d,%.1f,%.1f,%d\n",
                      r.image_index, r.true_label, r.target_label, r.orig_conf, r.adv_conf_target,
                      r.adv_conf_true, r.best_angle, r.rot_conf_true, r.changing_rate,
                      r.recovered ? 1 : 0);
        out << buf;
    }
    if (!out) {
        throw IoError("cannot write " + path);
    }
}

void emit_sweep_csv(const SweepRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out << "angle,p0,p1,p2,p3,p4,p5,p6,p7,p8,p9\n";
    char buf[32];
    for (std::size_t i = 0; i < record.angles.size(); ++i) {
        out << record.angles[i];
        for (double p : record.curves[i]) {
            std::snprintf(buf, sizeof(buf), ",%.6f", p);
            out << buf;
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("cannot write " + path);
    }
}

std::string format_summary(const ExperimentSummary& summary) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "recovery_rate = %.6f\nmean_best_angle = %.6f\nmean_changing_rate = %.6f\n",
                  summary.recovery_rate, summary.mean_best_angle, summary.mean_changing_rate);
    return buf;
}

void write_experiment_outputs(const ExperimentOutput& output, const std::string& output_dir) {
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + output_dir + ": " + ec.message());
    }
    const std::string sep = output_dir.empty() || output_dir.back() == '/' ? "" : "/";
    emit_records_csv(output.records, output_dir + sep + "records.csv");
    for (std::size_t i = 0; i < output.records.size(); ++i) {
        emit_sweep_csv(output.sweeps[i], output_dir + sep + "sweep_" +
                                             std::to_string(output.records[i].image_index) +
                                             ".csv");
    }
    const std::string summary = format_summary(output.summary);
    std::ofstream out(output_dir + sep + "summary.txt", std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + output_dir + sep + "summary.txt for writing");
    }
    out << summary;
}

}  // namespace rotdef
