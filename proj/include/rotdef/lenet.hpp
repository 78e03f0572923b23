#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rotdef/mnist.hpp"
#include "rotdef/ops.hpp"
#include "rotdef/tensor.hpp"

namespace rotdef {

inline constexpr std::size_t kModelInput = 32;  // 28x28 images are zero-padded to 32x32
inline constexpr std::size_t kPad = (kModelInput - kImageRows) / 2;

/// LeNet-5 style stack: conv 6@5x5, tanh, 2x2 mean pool, conv 16@5x5, tanh,
/// 2x2 mean pool, conv 120@5x5, tanh, dense 84, tanh, dense 10.
/// Shape chain: 1x32x32 -> 6x28x28 -> 6x14x14 -> 16x10x10 -> 16x5x5 -> 120 -> 84 -> 10.
struct Model {
    Tensor c1_kernels, c1_bias;    // [6,1,5,5], [6]
    Tensor c3_kernels, c3_bias;    // [16,6,5,5], [16]
    Tensor c5_kernels, c5_bias;    // [120,16,5,5], [120]
    Tensor f6_weights, f6_bias;    // [84,120], [84]
    Tensor out_weights, out_bias;  // [10,84], [10]

    std::vector<std::pair<std::string, Tensor*>> named_parameters();
    std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
    std::size_t parameter_count() const;
};

/// Architecture with all parameters zero.
Model make_empty_model();

/// Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero.
Model build_model(std::uint64_t seed);

struct TrainConfig {
    int epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    std::uint64_t seed = 42;
    // Stop after the first epoch whose validation accuracy reaches this; 1.0
    // keeps validation purely informational.
    double validation_target_accuracy = 1.0;
};

struct EpochStats {
    int epoch = 0;
    double mean_train_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double final_validation_accuracy = 0.0;
};

/// Intermediate activations of one forward pass, as consumed by backward().
struct Activations {
    Tensor input;       // [1,32,32]
    Tensor c1, a1, s2;  // conv out, tanh out, pool out
    Tensor c3, a3, s4;
    Tensor c5, a5;  // [120] after flatten
    Tensor f6, a6;  // [84]
    Tensor logits;  // [10]
};

Tensor pad_image(const Image& image);  // [1,32,32], zero border
Activations forward(const Model& model, const Image& image);

ProbVector predict_proba(const Model& model, const Image& image);
int predict(const Model& model, const Image& image);

struct ParamGrads {
    Tensor c1_kernels, c1_bias;
    Tensor c3_kernels, c3_bias;
    Tensor c5_kernels, c5_bias;
    Tensor f6_weights, f6_bias;
    Tensor out_weights, out_bias;
};

struct BackwardResult {
    ParamGrads params;
    Tensor input;  // [1,28,28]: gradient w.r.t. the unpadded image
};

/// Gradients of cross_entropy(one_hot(label), softmax(logits)) from a cached forward pass.
BackwardResult backward(const Model& model, const Activations& acts, int label);

/// d loss / d image for label, with the padding border cropped away. [1,28,28]
Tensor input_gradient(const Model& model, const Image& image, int label);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch SGD. Deterministic for a fixed seed.
TrainReport train(Model& model, const LabeledDataset& train_set,
                  const LabeledDataset& validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

double evaluate_accuracy(const Model& model, const LabeledDataset& dataset);

// Checkpoint container: magic "LN5CKPT", version u32 BE, 32-byte architecture
// fingerprint, then per tensor: name (u16 BE length + bytes), rank u8,
// dims u32 BE each, payload of f64 BE row-major. Round trips bit-exactly.
std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace rotdef
