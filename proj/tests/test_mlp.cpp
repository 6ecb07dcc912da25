#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scl/evaluate.hpp"
#include "scl/mlp.hpp"
#include "scl/rng.hpp"

#include <cmath>

using namespace scl;

TEST_CASE("parameter count matches the architecture") {
    const auto model = learn::mlp_init(100, {});
    CHECK(model.parameter_count() == 132865);
    // 100->256->256->128->64->1 with biases.
    Index expected = 0;
    const Index sizes[] = {100, 256, 256, 128, 64, 1};
    for (int l = 0; l + 1 < 6; ++l) expected += sizes[l] * sizes[l + 1] + sizes[l + 1];
    CHECK(expected == 132865);

    const auto small = learn::mlp_init(10, {});
    CHECK(small.parameter_count() == 10 * 256 + 256 + 256 * 256 + 256 + 256 * 128 + 128 + 128 * 64 + 64 + 64 + 1);
}

TEST_CASE("initialization is uniform within the layer bound with zero biases") {
    learn::MlpConfig cfg;
    cfg.seed = 5;
    const auto model = learn::mlp_init(20, cfg);
    REQUIRE(model.weights.size() == 5);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(model.weights[l].cols() + model.weights[l].rows()));
        CHECK(model.weights[l].cwiseAbs().maxCoeff() <= limit);
        CHECK(model.weights[l].cwiseAbs().maxCoeff() > 0.5 * limit);
        CHECK(model.biases[l].cwiseAbs().maxCoeff() == 0.0);
    }
    const auto again = learn::mlp_init(20, cfg);
    CHECK((model.weights[0].array() == again.weights[0].array()).all());
    cfg.seed = 6;
    const auto other = learn::mlp_init(20, cfg);
    CHECK(!(model.weights[0].array() == other.weights[0].array()).all());
}

TEST_CASE("backpropagation matches finite differences on every layer") {
    learn::MlpConfig cfg;
    cfg.hidden = {7, 5, 4, 3};
    cfg.seed = 11;
    auto model = learn::mlp_init(6, cfg);

    Rng rng(12);
    RowMatXd x(9, 6);
    VecXi y(9);
    for (Eigen::Index r = 0; r < 9; ++r) {
        for (Eigen::Index c = 0; c < 6; ++c) x(r, c) = rng.normal();
        y[r] = rng.bernoulli(0.5) ? 1 : 0;
    }

    const auto grads = learn::mlp_gradients(model, x, y);
    const double h = 1e-6;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        double worst = 0.0;
        for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) {
                const double keep = model.weights[l](r, c);
                model.weights[l](r, c) = keep + h;
                const double up = learn::mlp_loss(model, x, y);
                model.weights[l](r, c) = keep - h;
                const double dn = learn::mlp_loss(model, x, y);
                model.weights[l](r, c) = keep;
                const double fd = (up - dn) / (2 * h);
                const double denom = std::max({std::abs(fd), std::abs(grads.weights[l](r, c)), 1e-8});
                worst = std::max(worst, std::abs(fd - grads.weights[l](r, c)) / denom);
            }
        }
        for (Eigen::Index r = 0; r < model.biases[l].size(); ++r) {
            const double keep = model.biases[l][r];
            model.biases[l][r] = keep + h;
            const double up = learn::mlp_loss(model, x, y);
            model.biases[l][r] = keep - h;
            const double dn = learn::mlp_loss(model, x, y);
            model.biases[l][r] = keep;
            const double fd = (up - dn) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(grads.biases[l][r]), 1e-8});
            worst = std::max(worst, std::abs(fd - grads.biases[l][r]) / denom);
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("zero epochs leaves the initialization untouched") {
    learn::TrainingSet set;
    Rng rng(13);
    set.features.resize(12, 4);
    set.labels.resize(12);
    for (Eigen::Index r = 0; r < 12; ++r) {
        for (Eigen::Index c = 0; c < 4; ++c) set.features(r, c) = rng.normal();
        set.labels[r] = r % 2;
    }
    learn::MlpConfig cfg;
    cfg.hidden = {5};
    cfg.epochs = 0;
    cfg.seed = 2;
    const auto trained = learn::fit_mlp(set, cfg);
    const auto init = learn::mlp_init(4, cfg);
    for (std::size_t l = 0; l < trained.weights.size(); ++l) {
        CHECK((trained.weights[l].array() == init.weights[l].array()).all());
        CHECK((trained.biases[l].array() == init.biases[l].array()).all());
    }
}

TEST_CASE("a small network learns XOR") {
    learn::TrainingSet set;
    set.features.resize(200, 2);
    set.labels.resize(200);
    Rng rng(14);
    for (Eigen::Index r = 0; r < 200; ++r) {
        const int a = rng.bernoulli(0.5) ? 1 : 0;
        const int b = rng.bernoulli(0.5) ? 1 : 0;
        set.features(r, 0) = a + 0.05 * rng.normal();
        set.features(r, 1) = b + 0.05 * rng.normal();
        set.labels[r] = a ^ b;
    }
    learn::MlpConfig cfg;
    cfg.hidden = {16, 8};
    cfg.learning_rate = 0.3;
    cfg.epochs = 300;
    cfg.batch_size = 16;
    cfg.seed = 15;
    const auto model = learn::fit_mlp(set, cfg);
    const VecXd scores = learn::predict(model, set.features);
    CHECK(scores.minCoeff() >= 0.0);
    CHECK(scores.maxCoeff() <= 1.0);
    CHECK(eval::auc<double>(scores, set.labels) > 0.95);
}

TEST_CASE("training is deterministic per seed") {
    learn::TrainingSet set;
    Rng rng(16);
    set.features.resize(40, 3);
    set.labels.resize(40);
    for (Eigen::Index r = 0; r < 40; ++r) {
        for (Eigen::Index c = 0; c < 3; ++c) set.features(r, c) = rng.normal();
        set.labels[r] = rng.bernoulli(0.4) ? 1 : 0;
    }
    learn::MlpConfig cfg;
    cfg.hidden = {6, 4};
    cfg.epochs = 5;
    cfg.seed = 21;
    const auto a = learn::fit_mlp(set, cfg);
    const auto b = learn::fit_mlp(set, cfg);
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        CHECK((a.weights[l].array() == b.weights[l].array()).all());
}

TEST_CASE("loss agrees with a hand-computed cross entropy") {
    learn::MlpConfig cfg;
    cfg.hidden = {2};
    cfg.seed = 30;
    auto model = learn::mlp_init(1, cfg);
    // Zero the network so every output is sigmoid(0) = 0.5.
    for (auto& w : model.weights) w.setZero();
    RowMatXd x(2, 1);
    x << 0.7, -0.3;
    VecXi y(2);
    y << 1, 0;
    CHECK(learn::mlp_loss(model, x, y) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("config and input validation") {
    learn::MlpConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.hidden = {};
    const auto bare = learn::mlp_init(3, cfg);
    CHECK(bare.weights.size() == 1);  // no hidden layers leaves a logistic unit
    CHECK_THROWS_AS(learn::mlp_init(0, {}), std::invalid_argument);

    const auto model = learn::mlp_init(3, {});
    RowMatXd wrong(2, 4);
    wrong.setZero();
    CHECK_THROWS_AS(learn::predict(model, wrong), std::invalid_argument);
}
