#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "scl/evaluate.hpp"
#include "scl/rng.hpp"

using namespace scl;

TEST_CASE("auc on a worked example") {
    VecXd scores(4);
    scores << 0.9, 0.4, 0.6, 0.1;
    VecXi labels(4);
    labels << 1, 0, 1, 0;
    // Positive/negative pairs: (0.9,0.4)+ (0.9,0.1)+ (0.6,0.4)+ (0.6,0.1)+ all wins except none lost.
    CHECK(eval::auc<double>(scores, labels) == doctest::Approx(1.0));
    scores << 0.9, 0.6, 0.4, 0.1;
    CHECK(eval::auc<double>(scores, labels) == doctest::Approx(0.75));
}

TEST_CASE("constant scores give exactly one half") {
    VecXd scores = VecXd::Constant(10, 0.3);
    VecXi labels(10);
    for (Eigen::Index r = 0; r < 10; ++r) labels[r] = r < 4 ? 1 : 0;
    CHECK(eval::auc<double>(scores, labels) == doctest::Approx(0.5));
}

TEST_CASE("rank auc equals pairwise counting on tied instances") {
    Rng rng(70);
    for (int instance = 0; instance < 30; ++instance) {
        const auto m = static_cast<Eigen::Index>(10 + rng.below(191));
        VecXd scores(m);
        VecXi labels(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            // Coarse grid forces plenty of ties.
            scores[r] = static_cast<double>(rng.below(12)) / 11.0;
            labels[r] = rng.bernoulli(0.3) ? 1 : 0;
        }
        if (labels.sum() == 0) labels[0] = 1;
        if (labels.sum() == m) labels[0] = 0;
        const double fast = eval::auc<double>(scores, labels);
        const double slow = oracles::auc_pairwise(scores, labels);
        CHECK(std::abs(fast - slow) < 1e-12);
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    Rng rng(71);
    VecXd scores(50);
    VecXi labels(50);
    for (Eigen::Index r = 0; r < 50; ++r) {
        scores[r] = rng.normal();
        labels[r] = rng.bernoulli(0.4) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base = eval::auc<double>(scores, labels);
    const VecXd affine = 3.0 * scores.array() + 7.0;
    CHECK(eval::auc<double>(affine, labels) == base);
    VecXd squashed(50);
    for (Eigen::Index r = 0; r < 50; ++r) squashed[r] = std::tanh(scores[r]);
    CHECK(eval::auc<double>(squashed, labels) == base);
}

TEST_CASE("auc rejects degenerate label sets") {
    VecXd scores = VecXd::Zero(4);
    VecXi ones = VecXi::Ones(4);
    CHECK_THROWS_AS(eval::auc<double>(scores, ones), std::invalid_argument);
    VecXi mixed(3);
    mixed << 0, 1, 0;
    CHECK_THROWS_AS(eval::auc<double>(scores, mixed), std::invalid_argument);
}

TEST_CASE("roc area equals the rank auc, ties included") {
    Rng rng(72);
    for (int instance = 0; instance < 10; ++instance) {
        VecXd scores(60);
        VecXi labels(60);
        for (Eigen::Index r = 0; r < 60; ++r) {
            scores[r] = static_cast<double>(rng.below(8)) / 7.0;
            labels[r] = rng.bernoulli(0.35) ? 1 : 0;
        }
        labels[0] = 1;
        labels[1] = 0;
        const auto curve = eval::roc<double>(scores, labels);
        CHECK(curve.auc == doctest::Approx(eval::auc<double>(scores, labels)).epsilon(1e-12));
        CHECK(curve.points.front().fpr == 0.0);
        CHECK(curve.points.front().tpr == 0.0);
        CHECK(curve.points.back().fpr == doctest::Approx(1.0));
        CHECK(curve.points.back().tpr == doctest::Approx(1.0));
        for (std::size_t s = 1; s < curve.points.size(); ++s) {
            CHECK(curve.points[s].fpr >= curve.points[s - 1].fpr);
            CHECK(curve.points[s].tpr >= curve.points[s - 1].tpr);
        }
    }
}

TEST_CASE("averaging identical curves reproduces the curve") {
    VecXd scores(8);
    scores << 0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1;
    VecXi labels(8);
    labels << 1, 0, 1, 1, 0, 1, 0, 0;
    const auto curve = eval::roc<double>(scores, labels);
    const auto avg = eval::average_roc({curve, curve, curve});
    const auto single = eval::average_roc({curve});
    CHECK(avg.auc == single.auc);
    for (std::size_t g = 0; g < avg.points.size(); ++g)
        CHECK(avg.points[g].tpr == single.points[g].tpr);
    // Grid discretization only nicks the staircase corners.
    CHECK(std::abs(avg.auc - curve.auc) < 0.01);
}

TEST_CASE("pearson correlation on a known line and a degenerate column") {
    VecXd x(4), y(4);
    x << 1, 2, 3, 4;
    y << 2, 4, 6, 8;
    CHECK(eval::pearson<double>(x, y) == doctest::Approx(1.0));
    y << 8, 6, 4, 2;
    CHECK(eval::pearson<double>(x, y) == doctest::Approx(-1.0));
    y << 1, 2, 2, 1;
    CHECK(std::abs(eval::pearson<double>(x, y)) < 1.0);
    const VecXd flat = VecXd::Constant(4, 2.0);
    CHECK(std::isnan(eval::pearson<double>(x, flat)));
}

TEST_CASE("kendall tau-b matches brute force counting with ties") {
    Rng rng(73);
    for (int instance = 0; instance < 20; ++instance) {
        const auto n = static_cast<Eigen::Index>(5 + rng.below(60));
        VecXd x(n), y(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            x[r] = static_cast<double>(rng.below(6));
            y[r] = static_cast<double>(rng.below(6));
        }
        const double fast = eval::kendall_tau_b<double>(x, y);
        const double slow = oracles::kendall_pairwise(x, y);
        if (std::isnan(slow)) {
            CHECK(std::isnan(fast));
        } else {
            CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
        }
    }
}

TEST_CASE("correlation scores align with per-pair coefficients") {
    Rng rng(74);
    RowMatXd data(50, 4);
    for (Eigen::Index r = 0; r < 50; ++r)
        for (Eigen::Index c = 0; c < 4; ++c) data(r, c) = rng.normal();
    data.col(2) = 0.9 * data.col(0) + 0.1 * data.col(2);

    std::vector<Index> set = {pairs::linear_index(0, 2, 4), pairs::linear_index(1, 3, 4)};
    const VecXd pear = eval::correlation_scores<double>(data, set, eval::Correlation::kPearson);
    CHECK(pear[0] == doctest::Approx(std::abs(eval::pearson<double>(data.col(0), data.col(2)))));
    CHECK(pear[1] == doctest::Approx(std::abs(eval::pearson<double>(data.col(1), data.col(3)))));
    CHECK(pear[0] > pear[1]);

    const VecXd ken = eval::correlation_scores<double>(data, set, eval::Correlation::kKendall);
    CHECK(ken[0] == doctest::Approx(std::abs(eval::kendall_tau_b<double>(data.col(0), data.col(2)))));
}
