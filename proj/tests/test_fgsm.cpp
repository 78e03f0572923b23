#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rotdef/fgsm.hpp"
#include "testutil.hpp"

using namespace rotdef;
using test::random_image;

namespace {

// Model whose prediction is pinned by the output bias; gradients are exactly
// zero, which makes attack plumbing observable in isolation.
Model constant_model(int predicted_class) {
    Model m = make_empty_model();
    m.out_bias.data[static_cast<std::size_t>(predicted_class)] = 5.0;
    return m;
}

}  // namespace

TEST_CASE("fgsm_step with zero epsilon is the identity") {
    const Model model = build_model(1);
    std::mt19937_64 rng(1);
    const Image img = random_image(rng);
    const Image stepped = fgsm_step(model, img, 4, 0.0);
    CHECK(stepped == img);
}

TEST_CASE("fgsm_step moves interior pixels by exactly epsilon or not at all") {
    const Model model = build_model(2);
    Image img;
    img.pixels.fill(0.5);
    const double eps = 0.0078125;  // 2^-7, exactly representable
    const Image stepped = fgsm_step(model, img, 3, eps);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < kImagePixels; ++i) {
        const double delta = std::abs(stepped.pixels[i] - img.pixels[i]);
        const bool unchanged = delta == 0.0;
        const bool full_step = delta == eps;
        CHECK((unchanged || full_step));
        if (full_step) ++moved;
    }
    CHECK(moved > 0);  // a random model has nonzero gradient almost everywhere
    CHECK(lp_metrics(img, stepped).linf == eps);
}

TEST_CASE("fgsm_step respects the linf construction bound") {
    const Model model = build_model(3);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const Image img = random_image(rng);
        const double eps = 0.01;
        const Image stepped = fgsm_step(model, img, trial % 10, eps);
        CHECK(lp_metrics(img, stepped).linf <= eps + 1e-15);
        for (double p : stepped.pixels) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("one small step decreases the target-class loss") {
    const Model model = build_model(4);
    std::mt19937_64 rng(4);
    const Image img = random_image(rng, 0.2, 0.8);
    const int target = 6;
    const double before = cross_entropy(one_hot(target), predict_proba(model, img));
    const Image stepped = fgsm_step(model, img, target, 1e-3);
    const double after = cross_entropy(one_hot(target), predict_proba(model, stepped));
    CHECK(after < before);
}

TEST_CASE("craft_targeted with one zero-size iteration is a no-op") {
    const Model model = constant_model(1);
    std::mt19937_64 rng(5);
    const Image img = random_image(rng);
    AttackConfig config;
    config.iterations = 1;
    config.epsilon_step = 0.0;
    config.target_class = 8;
    const AttackResult result = craft_targeted(model, img, config);
    CHECK(result.trace.size() == 1);
    CHECK(result.adversarial == img);
    CHECK(result.success == false);
    CHECK(result.source_class == 1);
    CHECK(result.metrics.l0 == 0);
}

TEST_CASE("craft_targeted rejects an image already classified as the target") {
    const Model model = constant_model(8);
    std::mt19937_64 rng(6);
    AttackConfig config;
    config.target_class = 8;
    const std::string msg = test::thrown_message<ValidationError>(
        [&] { craft_targeted(model, random_image(rng), config); });
    CHECK(msg.find("already classified as target") != std::string::npos);
}

TEST_CASE("iterating k steps never exceeds the k*epsilon budget") {
    const Model model = build_model(7);
    std::mt19937_64 rng(7);
    const Image img = random_image(rng);
    AttackConfig config;
    config.target_class = (predict(model, img) + 1) % 10;
    config.epsilon_step = 0.01;
    for (int k = 1; k <= 5; ++k) {
        config.iterations = k;
        const AttackResult result = craft_targeted(model, img, config);
        CHECK(result.trace.size() == static_cast<std::size_t>(k));
        CHECK(result.metrics.linf <= k * config.epsilon_step + 1e-12);
    }
}

TEST_CASE("default budget keeps the adversarial image within linf 0.2 and in range") {
    const Model model = build_model(8);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 3; ++trial) {
        const Image img = random_image(rng);
        AttackConfig config;
        config.target_class = (predict(model, img) + 3) % 10;
        const AttackResult result = craft_targeted(model, img, config);
        CHECK(result.metrics.linf <= 0.20 + 1e-12);
        for (double p : result.adversarial.pixels) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("clipping holds even for an oversized step") {
    const Model model = build_model(9);
    std::mt19937_64 rng(9);
    const Image img = random_image(rng);
    AttackConfig config;
    config.target_class = (predict(model, img) + 1) % 10;
    config.epsilon_step = 0.4;
    config.iterations = 6;
    const AttackResult result = craft_targeted(model, img, config);
    for (double p : result.adversarial.pixels) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("craft_targeted is deterministic") {
    const Model model = build_model(10);
    std::mt19937_64 rng(10);
    const Image img = random_image(rng);
    AttackConfig config;
    config.target_class = (predict(model, img) + 2) % 10;
    const AttackResult a = craft_targeted(model, img, config);
    const AttackResult b = craft_targeted(model, img, config);
    CHECK(a.adversarial == b.adversarial);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].target_conf == b.trace[i].target_conf);
        CHECK(a.trace[i].true_conf == b.trace[i].true_conf);
    }
    CHECK(a.success == b.success);
}

TEST_CASE("batch_attack preserves order and validates its slice") {
    const Model model = build_model(11);
    std::mt19937_64 rng(11);
    AttackConfig config;
    config.target_class = 8;
    config.iterations = 2;

    std::vector<Image> images;
    while (images.size() < 4) {
        const Image candidate = random_image(rng);
        if (predict(model, candidate) != config.target_class) images.push_back(candidate);
    }
    const std::vector<int> labels(4, 1);

    const std::vector<AttackResult> results = batch_attack(model, images, labels, config);
    REQUIRE(results.size() == 4);
    for (std::size_t i = 0; i < results.size(); ++i) {
        const AttackResult lone = craft_targeted(model, images[i], config);
        CHECK(results[i].adversarial == lone.adversarial);
    }

    CHECK(batch_attack(model, {}, {}, config).empty());

    const std::vector<int> mixed = {1, 1, 2, 1};
    const std::string msg = test::thrown_message<ValidationError>(
        [&] { batch_attack(model, images, mixed, config); });
    CHECK(msg.find("mixed true classes") != std::string::npos);

    const std::vector<int> equal_target(4, 8);
    CHECK_THROWS_AS(batch_attack(model, images, equal_target, config), ValidationError);
}

TEST_CASE("attack config validation") {
    const Model model = constant_model(0);
    std::mt19937_64 rng(12);
    const Image img = random_image(rng);
    AttackConfig config;
    config.target_class = 12;
    CHECK_THROWS_AS(craft_targeted(model, img, config), ValidationError);
    config.target_class = 3;
    config.iterations = 0;
    CHECK_THROWS_AS(craft_targeted(model, img, config), ValidationError);
    config.iterations = 1;
    config.epsilon_step = -0.5;
    CHECK_THROWS_AS(craft_targeted(model, img, config), ValidationError);
}
