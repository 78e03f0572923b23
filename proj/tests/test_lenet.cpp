#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rotdef/lenet.hpp"
#include "rotdef/synth.hpp"
#include "testutil.hpp"

using namespace rotdef;
using test::central_diff;
using test::random_image;
using test::rel_error;

namespace {

LabeledDataset synth_dataset(std::size_t count, std::uint64_t seed) {
    const SynthSet set = generate_synth_digits(count, seed);
    LabeledDataset ds;
    ds.split_name = "synthetic";
    for (const RawGrid& g : set.grids) ds.images.push_back(normalize(g));
    ds.labels = set.labels;
    return ds;
}

double dataset_loss(const Model& model, const LabeledDataset& ds) {
    double total = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        total += cross_entropy(one_hot(ds.labels[i]), predict_proba(model, ds.images[i]));
    }
    return total / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("forward threads the published shape chain") {
    const Model model = build_model(1);
    Image zero;
    const Activations acts = forward(model, zero);
    CHECK(acts.input.shape == std::vector<std::size_t>{1, 32, 32});
    CHECK(acts.c1.shape == std::vector<std::size_t>{6, 28, 28});
    CHECK(acts.s2.shape == std::vector<std::size_t>{6, 14, 14});
    CHECK(acts.c3.shape == std::vector<std::size_t>{16, 10, 10});
    CHECK(acts.s4.shape == std::vector<std::size_t>{16, 5, 5});
    CHECK(acts.a5.shape == std::vector<std::size_t>{120});
    CHECK(acts.a6.shape == std::vector<std::size_t>{84});
    CHECK(acts.logits.shape == std::vector<std::size_t>{10});
    CHECK(acts.logits.all_finite());
}

TEST_CASE("all-zero parameters predict the uniform distribution") {
    const Model model = make_empty_model();
    std::mt19937_64 rng(2);
    const ProbVector probs = predict_proba(model, random_image(rng));
    for (double p : probs) CHECK(p == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("seeded init is reproducible") {
    const Model a = build_model(42);
    const Model b = build_model(42);
    const Model c = build_model(43);
    CHECK(serialize_checkpoint(a) == serialize_checkpoint(b));
    CHECK(serialize_checkpoint(a) != serialize_checkpoint(c));
}

TEST_CASE("forward is pure") {
    const Model model = build_model(3);
    std::mt19937_64 rng(3);
    const Image img = random_image(rng);
    const Tensor first = forward(model, img).logits;
    const Tensor second = forward(model, img).logits;
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
}

TEST_CASE("predict_proba sums to one and argmax ignores logit shifts") {
    const Model model = build_model(4);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const Image img = random_image(rng);
        const ProbVector probs = predict_proba(model, img);
        double sum = 0.0;
        for (double p : probs) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-9);

        Tensor logits = forward(model, img).logits;
        const int base = argmax_class(logits);
        for (double& v : logits.data) v += 123.0;
        CHECK(argmax_class(logits) == base);
    }
}

TEST_CASE("input gradient matches finite differences") {
    const Model model = build_model(5);
    std::mt19937_64 rng(5);
    Image img = random_image(rng, 0.05, 0.95);
    const int label = 3;
    const Tensor grad = input_gradient(model, img, label);
    REQUIRE(grad.shape == std::vector<std::size_t>{1, kImageRows, kImageCols});

    for (int probe = 0; probe < 20; ++probe) {
        const std::size_t pixel = static_cast<std::size_t>(uniform_index(rng, kImagePixels));
        const double fd = central_diff(
            [&](double v) {
                const double keep = img.pixels[pixel];
                img.pixels[pixel] = v;
                const double loss = cross_entropy(one_hot(label), predict_proba(model, img));
                img.pixels[pixel] = keep;
                return loss;
            },
            img.pixels[pixel]);
        CHECK(rel_error(fd, grad[pixel]) < 1e-4);
    }
}

TEST_CASE("parameter gradients match finite differences layer by layer") {
    Model model = build_model(6);
    std::mt19937_64 rng(6);
    const Image img = random_image(rng);
    const int label = 7;
    const BackwardResult result = backward(model, forward(model, img), label);

    auto loss_now = [&] {
        return cross_entropy(one_hot(label), predict_proba(model, img));
    };
    auto probe = [&](Tensor& param, const Tensor& grad) {
        for (int i = 0; i < 4; ++i) {
            const std::size_t idx = static_cast<std::size_t>(uniform_index(rng, param.size()));
            const double fd = central_diff(
                [&](double v) {
                    const double keep = param[idx];
                    param.data[idx] = v;
                    const double loss = loss_now();
                    param.data[idx] = keep;
                    return loss;
                },
                param[idx]);
            CHECK(rel_error(fd, grad[idx]) < 1e-4);
        }
    };
    probe(model.c1_kernels, result.params.c1_kernels);
    probe(model.c1_bias, result.params.c1_bias);
    probe(model.c3_kernels, result.params.c3_kernels);
    probe(model.c3_bias, result.params.c3_bias);
    probe(model.c5_kernels, result.params.c5_kernels);
    probe(model.c5_bias, result.params.c5_bias);
    probe(model.f6_weights, result.params.f6_weights);
    probe(model.f6_bias, result.params.f6_bias);
    probe(model.out_weights, result.params.out_weights);
    probe(model.out_bias, result.params.out_bias);
}

TEST_CASE("input gradient is zero when the prediction is exactly one-hot") {
    Model model = make_empty_model();
    // saturate the output bias so softmax underflows to an exact one-hot
    model.out_bias.data[2] = 1000.0;
    std::mt19937_64 rng(7);
    const Tensor grad = input_gradient(model, random_image(rng), 2);
    for (double v : grad.data) CHECK(v == 0.0);
}

TEST_CASE("one epoch on a small subset reduces the training loss") {
    const LabeledDataset subset = synth_dataset(100, 11);
    Model model = build_model(8);
    const double before = dataset_loss(model, subset);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 10;
    config.learning_rate = 0.05;
    config.seed = 1;
    const TrainReport report = train(model, subset, {}, config);
    CHECK(report.epochs.size() == 1);
    const double after = dataset_loss(model, subset);
    CHECK(after < before);
}

TEST_CASE("training with learning rate zero keeps parameters bit-identical") {
    const LabeledDataset subset = synth_dataset(40, 12);
    Model model = build_model(9);
    const std::vector<std::uint8_t> before = serialize_checkpoint(model);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 8;
    config.learning_rate = 0.0;
    const TrainReport report = train(model, subset, {}, config);
    CHECK(serialize_checkpoint(model) == before);
    CHECK(report.epochs.size() == 1);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const LabeledDataset subset = synth_dataset(60, 13);
    TrainConfig config;
    config.epochs = 2;
    config.batch_size = 16;
    config.learning_rate = 0.05;
    config.seed = 99;

    Model a = build_model(10);
    Model b = build_model(10);
    train(a, subset, {}, config);
    train(b, subset, {}, config);
    CHECK(serialize_checkpoint(a) == serialize_checkpoint(b));
}

TEST_CASE("training reports the epoch and batch of a non-finite loss") {
    const LabeledDataset subset = synth_dataset(20, 14);
    Model model = build_model(11);
    model.out_weights.data[0] = std::nan("");
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 4;
    const std::string msg =
        test::thrown_message<TrainingError>([&] { train(model, subset, {}, config); });
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
}

TEST_CASE("checkpoint round trip is byte-identical and prediction-identical") {
    const Model model = build_model(15);
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "rotdef_ckpt_test.bin";
    save_checkpoint(model, path.string());
    const Model loaded = load_checkpoint(path.string());
    const std::vector<std::uint8_t> first = read_file_bytes(path.string());
    save_checkpoint(loaded, path.string());
    CHECK(read_file_bytes(path.string()) == first);

    std::mt19937_64 rng(16);
    for (int i = 0; i < 100; ++i) {
        const Image img = random_image(rng);
        const Tensor a = forward(model, img).logits;
        const Tensor b = forward(loaded, img).logits;
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects tampered containers") {
    const Model model = build_model(17);
    const std::vector<std::uint8_t> good = serialize_checkpoint(model);

    std::vector<std::uint8_t> bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_checkpoint(bad_magic), FormatError);

    std::vector<std::uint8_t> bad_version = good;
    bad_version[10] = 9;  // version word is bytes 7..10
    CHECK_THROWS_AS(deserialize_checkpoint(bad_version), FormatError);

    std::vector<std::uint8_t> bad_fingerprint = good;
    bad_fingerprint[11] ^= 0xff;
    CHECK_THROWS_AS(deserialize_checkpoint(bad_fingerprint), ArchitectureError);

    std::vector<std::uint8_t> truncated(good.begin(), good.end() - 512);
    CHECK_THROWS_AS(deserialize_checkpoint(truncated), TruncationError);

    std::vector<std::uint8_t> trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_checkpoint(trailing), FormatError);
}

TEST_CASE("parameter count matches the full-connectivity architecture") {
    const Model model = build_model(18);
    // 6*25+6 + 16*6*25+16 + 120*16*25+120 + 84*120+84 + 10*84+10
    CHECK(model.parameter_count() == 61706);
}
