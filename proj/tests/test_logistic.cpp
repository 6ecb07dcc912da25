#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "scl/logistic.hpp"
#include "scl/rng.hpp"

#include <cmath>

using namespace scl;

namespace {

learn::TrainingSet random_instance(Rng& rng, Eigen::Index n, Eigen::Index d) {
    learn::TrainingSet set;
    set.features.resize(n, d);
    set.labels.resize(n);
    VecXd truth(d);
    for (Eigen::Index j = 0; j < d; ++j) truth[j] = rng.normal();
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index j = 0; j < d; ++j) set.features(r, j) = rng.normal();
        const double eta = set.features.row(r).dot(truth) + 0.3 * rng.normal();
        set.labels[r] = rng.uniform01() < learn::sigmoid(eta) ? 1 : 0;
    }
    if (set.labels.sum() == 0) set.labels[0] = 1;
    if (set.labels.sum() == n) set.labels[0] = 0;
    return set;
}

}  // namespace

TEST_CASE("sigmoid hits the textbook points") {
    CHECK(learn::sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(learn::sigmoid(std::log(3.0)) == doctest::Approx(0.75));
    CHECK(learn::sigmoid(-std::log(3.0)) == doctest::Approx(0.25));
    CHECK(learn::sigmoid(1000.0) == doctest::Approx(1.0));
    CHECK(learn::sigmoid(-1000.0) == doctest::Approx(0.0));
}

TEST_CASE("objective and gradient agree with finite differences") {
    Rng rng(50);
    const auto set = random_instance(rng, 40, 4);
    VecXd beta(4);
    for (Eigen::Index j = 0; j < 4; ++j) beta[j] = 0.3 * rng.normal();
    const double intercept = 0.1;

    const auto [g0, grad] = learn::logistic_gradient(set.features, set.labels, intercept, beta);
    const double h = 1e-6;
    // lambda = 0 so the penalty does not enter the difference quotient.
    const double up = learn::l1_logistic_objective(set.features, set.labels, intercept + h, beta, 0.0);
    const double dn = learn::l1_logistic_objective(set.features, set.labels, intercept - h, beta, 0.0);
    CHECK(g0 == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    for (Eigen::Index j = 0; j < 4; ++j) {
        VecXd bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        const double fp = learn::l1_logistic_objective(set.features, set.labels, intercept, bp, 0.0);
        const double fm = learn::l1_logistic_objective(set.features, set.labels, intercept, bm, 0.0);
        CHECK(grad[j] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("coordinate descent matches the proximal gradient oracle at fixed lambda") {
    Rng rng(60);
    for (int instance = 0; instance < 10; ++instance) {
        const auto n = static_cast<Eigen::Index>(20 + rng.below(41));
        const auto d = static_cast<Eigen::Index>(2 + rng.below(4));
        const auto set = random_instance(rng, n, d);
        const VecXd sw = VecXd::Ones(n);
        const double lam_max = learn::detail::lambda_max(set.features, set.labels, sw);
        const double lambda = 0.3 * lam_max;

        learn::L1FitOptions opts;
        opts.lambda_path = {lambda};
        opts.tol = 1e-12;
        const auto model = learn::fit_l1_logistic(set, opts);

        const auto oracle = oracles::lasso_prox_gradient(set.features, set.labels, lambda);
        CHECK(std::abs(model.intercept - oracle.intercept) < 1e-5);
        CHECK((model.coefficients - oracle.beta).cwiseAbs().maxCoeff() < 1e-5);
        CHECK(oracles::lasso_kkt_residual(set.features, set.labels, lambda, model.intercept,
                                          model.coefficients) < 1e-6);
    }
}

TEST_CASE("at lambda_max every slope is exactly zero") {
    Rng rng(61);
    const auto set = random_instance(rng, 60, 5);
    const VecXd sw = VecXd::Ones(60);
    const double lam_max = learn::detail::lambda_max(set.features, set.labels, sw);
    learn::L1FitOptions opts;
    opts.lambda_path = {lam_max * 1.0000001};
    const auto model = learn::fit_l1_logistic(set, opts);
    CHECK(model.coefficients.cwiseAbs().maxCoeff() == 0.0);
    // Intercept-only model predicts the base rate.
    const double ybar = static_cast<double>(set.labels.sum()) / 60.0;
    CHECK(learn::sigmoid(model.intercept) == doctest::Approx(ybar).epsilon(1e-6));
}

TEST_CASE("objective trace never increases") {
    Rng rng(62);
    const auto set = random_instance(rng, 80, 6);
    learn::L1FitOptions opts;
    opts.seed = 9;
    const auto model = learn::fit_l1_logistic(set, opts);
    REQUIRE(!model.objective_trace.empty());
    for (std::size_t s = 1; s < model.objective_trace.size(); ++s)
        CHECK(model.objective_trace[s] <= model.objective_trace[s - 1] + 1e-12);
}

TEST_CASE("cross-validation picks a lambda from the path and reports folds") {
    Rng rng(63);
    const auto set = random_instance(rng, 120, 5);
    learn::L1FitOptions opts;
    opts.path_size = 20;
    opts.seed = 17;
    const auto model = learn::fit_l1_logistic(set, opts);
    CHECK(model.cv_report.size() == 20);
    bool found = false;
    for (const auto& point : model.cv_report) {
        CHECK(point.folds_used >= 2);
        if (point.lambda == model.lambda) found = true;
    }
    CHECK(found);
    CHECK(model.lambda > 0.0);
}

TEST_CASE("separable data still returns a finite model") {
    // Perfectly separated on the first coordinate.
    learn::TrainingSet set;
    set.features.resize(30, 2);
    set.labels.resize(30);
    Rng rng(64);
    for (Eigen::Index r = 0; r < 30; ++r) {
        const double x = r < 15 ? -1.0 - rng.uniform01() : 1.0 + rng.uniform01();
        set.features(r, 0) = x;
        set.features(r, 1) = rng.normal();
        set.labels[r] = x > 0.0 ? 1 : 0;
    }
    learn::L1FitOptions opts;
    opts.seed = 3;
    const auto model = learn::fit_l1_logistic(set, opts);
    CHECK(std::isfinite(model.intercept));
    CHECK(model.coefficients.allFinite());
    const VecXd scores = learn::predict(model, set.features);
    CHECK(eval::auc<double>(scores, set.labels) > 0.99);
}

TEST_CASE("predict applies the logistic link to the affine score") {
    learn::L1LogisticModel model;
    model.intercept = std::log(3.0);
    model.coefficients = VecXd::Zero(2);
    RowMatXd rows(1, 2);
    rows << 5.0, -2.0;
    const VecXd out = learn::predict(model, rows);
    CHECK(out[0] == doctest::Approx(0.75));
    RowMatXd wrong(1, 3);
    wrong.setZero();
    CHECK_THROWS_AS(learn::predict(model, wrong), std::invalid_argument);
}

TEST_CASE("class weighting rebalances sample weights when enabled") {
    VecXi y(5);
    y << 1, 0, 0, 0, 0;
    const VecXd off = learn::detail::sample_weights(y, false);
    CHECK(off.sum() == doctest::Approx(5.0));
    CHECK(off.maxCoeff() == doctest::Approx(1.0));
    const VecXd on = learn::detail::sample_weights(y, true);
    CHECK(on.sum() == doctest::Approx(5.0));
    CHECK(on[0] == doctest::Approx(5.0 / 2.0));
    CHECK(on[1] == doctest::Approx(5.0 / 8.0));
}

TEST_CASE("training set validation rejects malformed input") {
    learn::TrainingSet set;
    set.features = MatXd::Zero(3, 2);
    set.labels.resize(2);
    set.labels << 0, 1;
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);

    set.labels.resize(3);
    set.labels << 0, 1, 2;
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);

    set.labels << 0, 1, 1;
    set.features(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);

    set.features(1, 1) = 0.0;
    CHECK_NOTHROW(set.validate());
}

TEST_CASE("single-class training is refused") {
    learn::TrainingSet set;
    set.features = MatXd::Random(10, 2);
    set.labels = VecXi::Zero(10);
    CHECK_THROWS_AS(learn::fit_l1_logistic(set), std::invalid_argument);
    set.labels = VecXi::Ones(10);
    CHECK_THROWS_AS(learn::fit_l1_logistic(set), std::invalid_argument);
}
