#include "rotdef/fgsm.hpp"

#include <algorithm>
#include <cmath>

namespace rotdef {

namespace {

void validate(const AttackConfig& config) {
    if (!(config.epsilon_step >= 0.0) || !std::isfinite(config.epsilon_step)) {
        throw ValidationError("attack: epsilon_step must be finite and >= 0");
    }
    if (config.iterations < 1) {
        throw ValidationError("attack: iterations must be >= 1");
    }
    if (config.target_class < 0 || config.target_class >= static_cast<int>(kNumClasses)) {
        throw ValidationError("attack: target_class " + std::to_string(config.target_class) +
                              " outside 0..9");
    }
}

double sign(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
}

}  // namespace

Image fgsm_step(const Model& model, const Image& image, int target_class, double epsilon_step) {
    const Tensor grad = input_gradient(model, image, target_class);
    Image out = image;
    for (std::size_t i = 0; i < kImagePixels; ++i) {
        const double v = image.pixels[i] - epsilon_step * sign(grad[i]);
        out.pixels[i] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

AttackResult craft_targeted(const Model& model, const Image& image, const AttackConfig& config) {
    validate(config);
    AttackResult result;
    result.target_class = config.target_class;
    result.source_class = predict(model, image);
    if (result.source_class == config.target_class) {
        throw ValidationError("attack: image already classified as target class " +
                              std::to_string(config.target_class));
    }

    Image current = image;
    result.trace.reserve(static_cast<std::size_t>(config.iterations));
    for (int it = 0; it < config.iterations; ++it) {
        current = fgsm_step(model, current, config.target_class, config.epsilon_step);
        const ProbVector probs = predict_proba(model, current);
        result.trace.push_back({probs[static_cast<std::size_t>(config.target_class)],
                                probs[static_cast<std::size_t>(result.source_class)]});
    }
    result.adversarial = current;
    result.metrics = lp_metrics(image, current);
    result.success = predict(model, current) == config.target_class;
    return result;
}

std::vector<AttackResult> batch_attack(const Model& model, std::span<const Image> images,
                                       std::span<const int> labels, const AttackConfig& config) {
    validate(config);
    if (images.size() != labels.size()) {
        throw ValidationError("batch_attack: " + std::to_string(images.size()) + " images but " +
                              std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != labels[0]) {
            throw ValidationError("batch_attack: mixed true classes (" +
                                  std::to_string(labels[0]) + " and " +
                                  std::to_string(labels[i]) + " at index " + std::to_string(i) +
                                  ")");
        }
        if (labels[i] == config.target_class) {
            throw ValidationError("batch_attack: true class equals target class " +
                                  std::to_string(config.target_class));
        }
    }
    std::vector<AttackResult> results;
    results.reserve(images.size());
    for (const Image& image : images) {
        results.push_back(craft_targeted(model, image, config));
    }
    return results;
}

}  // namespace rotdef
