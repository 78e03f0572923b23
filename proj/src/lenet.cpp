#include "rotdef/lenet.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "rotdef/rng.hpp"
#include "sha256.hpp"

namespace rotdef {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[7] = {'L', 'N', '5', 'C', 'K', 'P', 'T'};

Tensor flatten(const Tensor& t) {
    return Tensor({t.size()}, t.data);
}

std::string roster_string(const Model& model) {
    std::string roster;
    for (const auto& [name, tensor] : model.named_parameters()) {
        roster += name;
        roster += ':';
        for (std::size_t i = 0; i < tensor->shape.size(); ++i) {
            if (i) roster += 'x';
            roster += std::to_string(tensor->shape[i]);
        }
        roster += ';';
    }
    return roster;
}

void append_u16_be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_f64_be(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 7; i >= 0; --i) {
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
}

// Sequential reader with truncation diagnostics.
struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > bytes.size()) {
            throw TruncationError(std::string("checkpoint: ") + what + " needs " +
                                  std::to_string(pos + n) + " bytes, file has " +
                                  std::to_string(bytes.size()));
        }
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        const std::uint16_t v =
            static_cast<std::uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | bytes[pos + static_cast<std::size_t>(i)];
        pos += 4;
        return v;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes[pos++];
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[pos + static_cast<std::size_t>(i)];
        pos += 8;
        return std::bit_cast<double>(v);
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

std::vector<std::pair<std::string, Tensor*>> Model::named_parameters() {
    return {{"c1.kernels", &c1_kernels},   {"c1.bias", &c1_bias},
            {"c3.kernels", &c3_kernels},   {"c3.bias", &c3_bias},
            {"c5.kernels", &c5_kernels},   {"c5.bias", &c5_bias},
            {"f6.weights", &f6_weights},   {"f6.bias", &f6_bias},
            {"out.weights", &out_weights}, {"out.bias", &out_bias}};
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_parameters() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (const auto& [name, tensor] : const_cast<Model*>(this)->named_parameters()) {
        out.emplace_back(name, tensor);
    }
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, tensor] : named_parameters()) n += tensor->size();
    return n;
}

Model make_empty_model() {
    Model m;
    m.c1_kernels = Tensor::zeros({6, 1, 5, 5});
    m.c1_bias = Tensor::zeros({6});
    m.c3_kernels = Tensor::zeros({16, 6, 5, 5});
    m.c3_bias = Tensor::zeros({16});
    m.c5_kernels = Tensor::zeros({120, 16, 5, 5});
    m.c5_bias = Tensor::zeros({120});
    m.f6_weights = Tensor::zeros({84, 120});
    m.f6_bias = Tensor::zeros({84});
    m.out_weights = Tensor::zeros({10, 84});
    m.out_bias = Tensor::zeros({10});
    return m;
}

Model build_model(std::uint64_t seed) {
    Model m = make_empty_model();
    std::mt19937_64 rng(seed);
    auto init = [&rng](Tensor& t, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : t.data) v = uniform_in(rng, -bound, bound);
    };
    init(m.c1_kernels, 1 * 5 * 5);
    init(m.c3_kernels, 6 * 5 * 5);
    init(m.c5_kernels, 16 * 5 * 5);
    init(m.f6_weights, 120);
    init(m.out_weights, 84);
    return m;
}

Tensor pad_image(const Image& image) {
    Tensor padded = Tensor::zeros({1, kModelInput, kModelInput});
    for (std::size_t r = 0; r < kImageRows; ++r) {
        for (std::size_t c = 0; c < kImageCols; ++c) {
            padded.at(0, r + kPad, c + kPad) = image.at(r, c);
        }
    }
    return padded;
}

Activations forward(const Model& model, const Image& image) {
    Activations a;
    a.input = pad_image(image);
    a.c1 = conv2d_forward(a.input, model.c1_kernels, model.c1_bias);
    a.a1 = tanh_forward(a.c1);
    a.s2 = avgpool2_forward(a.a1);
    a.c3 = conv2d_forward(a.s2, model.c3_kernels, model.c3_bias);
    a.a3 = tanh_forward(a.c3);
    a.s4 = avgpool2_forward(a.a3);
    a.c5 = conv2d_forward(a.s4, model.c5_kernels, model.c5_bias);
    a.a5 = flatten(tanh_forward(a.c5));
    a.f6 = dense_forward(a.a5, model.f6_weights, model.f6_bias);
    a.a6 = tanh_forward(a.f6);
    a.logits = dense_forward(a.a6, model.out_weights, model.out_bias);
    return a;
}

ProbVector predict_proba(const Model& model, const Image& image) {
    return softmax_probs(forward(model, image).logits);
}

int predict(const Model& model, const Image& image) {
    return argmax_class(forward(model, image).logits);
}

BackwardResult backward(const Model& model, const Activations& acts, int label) {
    BackwardResult r;
    const Tensor g_logits = softmax_xent_grad(one_hot(label), acts.logits);

    DenseGrads d_out = dense_backward(g_logits, acts.a6, model.out_weights);
    r.params.out_weights = std::move(d_out.weights);
    r.params.out_bias = std::move(d_out.bias);

    const Tensor g_f6 = tanh_backward(d_out.input, acts.a6);
    DenseGrads d_f6 = dense_backward(g_f6, acts.a5, model.f6_weights);
    r.params.f6_weights = std::move(d_f6.weights);
    r.params.f6_bias = std::move(d_f6.bias);

    const Tensor g_a5 = tanh_backward(d_f6.input, acts.a5);
    Conv2dGrads d_c5 =
        conv2d_backward(Tensor({120, 1, 1}, g_a5.data), acts.s4, model.c5_kernels);
    r.params.c5_kernels = std::move(d_c5.kernels);
    r.params.c5_bias = std::move(d_c5.bias);

    const Tensor g_a3 = tanh_backward(avgpool2_backward(d_c5.input), acts.a3);
    Conv2dGrads d_c3 = conv2d_backward(g_a3, acts.s2, model.c3_kernels);
    r.params.c3_kernels = std::move(d_c3.kernels);
    r.params.c3_bias = std::move(d_c3.bias);

    const Tensor g_a1 = tanh_backward(avgpool2_backward(d_c3.input), acts.a1);
    Conv2dGrads d_c1 = conv2d_backward(g_a1, acts.input, model.c1_kernels);
    r.params.c1_kernels = std::move(d_c1.kernels);
    r.params.c1_bias = std::move(d_c1.bias);

    // Crop the 32x32 gradient back to the 28x28 image frame.
    r.input = Tensor::zeros({1, kImageRows, kImageCols});
    for (std::size_t row = 0; row < kImageRows; ++row) {
        for (std::size_t col = 0; col < kImageCols; ++col) {
            r.input.at(0, row, col) = d_c1.input.at(0, row + kPad, col + kPad);
        }
    }
    return r;
}

Tensor input_gradient(const Model& model, const Image& image, int label) {
    return backward(model, forward(model, image), label).input;
}

double evaluate_accuracy(const Model& model, const LabeledDataset& dataset) {
    if (dataset.images.empty()) {
        throw ValidationError("evaluate_accuracy: empty dataset");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.images.size(); ++i) {
        if (predict(model, dataset.images[i]) == dataset.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.images.size());
}

namespace {

void accumulate(ParamGrads& total, const BackwardResult& sample) {
    auto add = [](Tensor& dst, const Tensor& src) {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    };
    add(total.c1_kernels, sample.params.c1_kernels);
    add(total.c1_bias, sample.params.c1_bias);
    add(total.c3_kernels, sample.params.c3_kernels);
    add(total.c3_bias, sample.params.c3_bias);
    add(total.c5_kernels, sample.params.c5_kernels);
    add(total.c5_bias, sample.params.c5_bias);
    add(total.f6_weights, sample.params.f6_weights);
    add(total.f6_bias, sample.params.f6_bias);
    add(total.out_weights, sample.params.out_weights);
    add(total.out_bias, sample.params.out_bias);
}

ParamGrads zero_grads() {
    ParamGrads g;
    const Model shape = make_empty_model();
    g.c1_kernels = Tensor::zeros(shape.c1_kernels.shape);
    g.c1_bias = Tensor::zeros(shape.c1_bias.shape);
    g.c3_kernels = Tensor::zeros(shape.c3_kernels.shape);
    g.c3_bias = Tensor::zeros(shape.c3_bias.shape);
    g.c5_kernels = Tensor::zeros(shape.c5_kernels.shape);
    g.c5_bias = Tensor::zeros(shape.c5_bias.shape);
    g.f6_weights = Tensor::zeros(shape.f6_weights.shape);
    g.f6_bias = Tensor::zeros(shape.f6_bias.shape);
    g.out_weights = Tensor::zeros(shape.out_weights.shape);
    g.out_bias = Tensor::zeros(shape.out_bias.shape);
    return g;
}

void apply_sgd_step(Model& model, const ParamGrads& grads, double scale) {
    auto step = [scale](Tensor& param, const Tensor& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) param[i] -= scale * grad[i];
    };
    step(model.c1_kernels, grads.c1_kernels);
    step(model.c1_bias, grads.c1_bias);
    step(model.c3_kernels, grads.c3_kernels);
    step(model.c3_bias, grads.c3_bias);
    step(model.c5_kernels, grads.c5_kernels);
    step(model.c5_bias, grads.c5_bias);
    step(model.f6_weights, grads.f6_weights);
    step(model.f6_bias, grads.f6_bias);
    step(model.out_weights, grads.out_weights);
    step(model.out_bias, grads.out_bias);
}

}  // namespace

TrainReport train(Model& model, const LabeledDataset& train_set,
                  const LabeledDataset& validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    if (config.epochs <= 0 || config.batch_size == 0) {
        throw ValidationError("train: epochs and batch_size must be positive");
    }
    if (!std::isfinite(config.learning_rate) || config.learning_rate < 0.0) {
        throw ValidationError("train: learning_rate must be finite and non-negative");
    }
    if (train_set.images.empty() || train_set.images.size() != train_set.labels.size()) {
        throw ValidationError("train: malformed training set");
    }

    std::mt19937_64 rng(config.seed);
    const std::size_t n = train_set.images.size();
    TrainReport report;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<std::size_t> order = shuffled_indices(n, rng);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, start + config.batch_size);
            ParamGrads batch_grads = zero_grads();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t sample = order[i];
                const Activations acts = forward(model, train_set.images[sample]);
                const int label = train_set.labels[sample];
                batch_loss +=
                    cross_entropy(one_hot(label), softmax_probs(acts.logits));
                accumulate(batch_grads, backward(model, acts, label));
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_index));
            }
            loss_sum += batch_loss;
            apply_sgd_step(model, batch_grads,
                           config.learning_rate / static_cast<double>(end - start));
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_train_loss = loss_sum / static_cast<double>(n);
        stats.validation_accuracy =
            validation_set.images.empty() ? 0.0 : evaluate_accuracy(model, validation_set);
        report.epochs.push_back(stats);
        report.final_validation_accuracy = stats.validation_accuracy;
        if (on_epoch) on_epoch(stats);
        if (stats.validation_accuracy >= config.validation_target_accuracy) break;
    }
    return report;
}

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + sizeof(kCheckpointMagic));
    append_u32_be(out, kCheckpointVersion);
    const auto fingerprint = detail::sha256(roster_string(model));
    out.insert(out.end(), fingerprint.begin(), fingerprint.end());
    for (const auto& [name, tensor] : model.named_parameters()) {
        append_u16_be(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(static_cast<std::uint8_t>(tensor->rank()));
        for (std::size_t d : tensor->shape) {
            append_u32_be(out, static_cast<std::uint32_t>(d));
        }
        for (double v : tensor->data) {
            append_f64_be(out, v);
        }
    }
    return out;
}

Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    ByteReader r{bytes};
    const std::string magic = r.str(sizeof(kCheckpointMagic), "magic");
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        throw FormatError("checkpoint: bad magic");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }

    Model model = make_empty_model();
    const auto expected = detail::sha256(roster_string(model));
    const std::string stored = r.str(expected.size(), "architecture fingerprint");
    if (std::memcmp(stored.data(), expected.data(), expected.size()) != 0) {
        throw ArchitectureError("checkpoint: architecture fingerprint mismatch");
    }

    for (auto& [name, tensor] : model.named_parameters()) {
        const std::uint16_t name_len = r.u16("tensor name length");
        const std::string stored_name = r.str(name_len, "tensor name");
        if (stored_name != name) {
            throw ArchitectureError("checkpoint: tensor '" + stored_name + "' where '" + name +
                                    "' was expected");
        }
        const std::uint8_t rank = r.u8("tensor rank");
        if (rank != tensor->rank()) {
            throw ArchitectureError("checkpoint: tensor '" + name + "' has rank " +
                                    std::to_string(rank) + ", expected " +
                                    std::to_string(tensor->rank()));
        }
        for (std::size_t axis = 0; axis < tensor->rank(); ++axis) {
            const std::uint32_t dim = r.u32("tensor dim");
            if (dim != tensor->shape[axis]) {
                throw ArchitectureError("checkpoint: tensor '" + name + "' axis " +
                                        std::to_string(axis) + " is " + std::to_string(dim) +
                                        ", expected " + std::to_string(tensor->shape[axis]));
            }
        }
        for (std::size_t i = 0; i < tensor->size(); ++i) {
            tensor->data[i] = r.f64("tensor payload");
        }
    }
    if (r.pos != bytes.size()) {
        throw FormatError("checkpoint: " + std::to_string(bytes.size() - r.pos) +
                          " trailing bytes");
    }
    return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
    write_file_bytes(path, serialize_checkpoint(model));
}

Model load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace rotdef
