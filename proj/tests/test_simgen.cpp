#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "scl/simgen.hpp"

#include <cmath>

using namespace scl;

namespace {

sim::ScmSpec two_node_chain(double w) {
    sim::ScmSpec spec;
    spec.p_obs = 2;
    spec.p_lat = 0;
    spec.weights = MatXd::Zero(2, 2);
    spec.weights(0, 1) = w;
    spec.noise_sd = VecXd::Constant(2, 0.5);
    spec.noise_mean = VecXd::Zero(2);
    spec.noise_mean << 3.0, 1.0;
    return spec;
}

}  // namespace

TEST_CASE("sampled SCMs validate, stay subcritical, and are reproducible") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto spec = sim::sample_scm(15, 5, 0.15, false, seed);
        CHECK_NOTHROW(spec.validate());
        CHECK(sim::spectral_radius(spec.weights) < 0.95);
        const auto again = sim::sample_scm(15, 5, 0.15, false, seed);
        CHECK((spec.weights.array() == again.weights.array()).all());

        const auto cyc = sim::sample_scm(15, 5, 0.15, true, seed);
        CHECK_NOTHROW(cyc.validate());
        CHECK(sim::spectral_radius(cyc.weights) < 0.95);
    }
}

TEST_CASE("acyclic sampling yields nilpotent weights") {
    const auto spec = sim::sample_scm(12, 4, 0.3, false, 9);
    const Index p = spec.total();
    MatXd power = MatXd::Identity(p, p);
    for (Index step = 0; step < p; ++step) power = power * spec.weights.cwiseAbs();
    CHECK(power.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every sample satisfies its equilibrium equations to 1e-10") {
    const auto spec = sim::sample_scm(10, 3, 0.2, true, 17);
    const Index p = spec.total();
    const MatXd system = MatXd::Identity(p, p) - spec.weights.transpose();
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto sample = sim::simulate_detailed_sample(spec, -1, 33, s);
        CHECK((system * sample.values - sample.noise).cwiseAbs().maxCoeff() < 1e-10);
    }
    // Under intervention the target's incoming edges are severed.
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto sample = sim::simulate_detailed_sample(spec, 4, 33, s);
        CHECK(sample.values[4] == doctest::Approx(sample.noise[4]).epsilon(1e-12));
        MatXd severed = system;
        severed.row(4).setZero();
        severed(4, 4) = 1.0;
        CHECK((severed * sample.values - sample.noise).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("knockdown of a chain shifts the child by w*(gamma*mu - mu)") {
    const double w = 0.7;
    auto spec = two_node_chain(w);
    spec.intervention_model.knockdown_factor = 0.1;
    spec.intervention_model.shift = 0.0;
    const VecXd mu = sim::observational_means(spec);
    CHECK(mu[0] == doctest::Approx(3.0));
    CHECK(mu[1] == doctest::Approx(1.0 + w * 3.0));

    const Index n = 40000;
    std::vector<sim::InterventionRequest> reqs = {{0, n, sim::PanelRole::kTrainTest}};
    const auto out = sim::simulate(spec, 0, reqs, 101);
    const auto& block = out.panels.front().replicates.front();
    const double expected_shift = w * (0.1 * mu[0] - mu[0]);
    const double sd_child = std::sqrt(0.25 + w * w * 0.25);
    const double tol = 4.0 * sd_child / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(block.col(1).mean() - mu[1] - expected_shift) < tol);

    // The target itself sits at gamma*mu plus its own noise.
    const double tol_target = 4.0 * 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(block.col(0).mean() - 0.1 * mu[0]) < tol_target);
}

TEST_CASE("two-node cyclic covariance matches the analytic form within 3 SE") {
    sim::ScmSpec spec;
    spec.p_obs = 2;
    spec.p_lat = 0;
    spec.weights = MatXd::Zero(2, 2);
    spec.weights(0, 1) = 0.6;
    spec.weights(1, 0) = 0.4;
    spec.noise_sd = VecXd::Constant(2, 1.0);
    spec.noise_sd[1] = 0.8;
    spec.noise_mean = VecXd::Constant(2, 2.0);
    spec.validate();

    const Index n = 100000;
    const auto out = sim::simulate(spec, n, {}, 77);
    const RowMatXd& x = out.observational.values;
    const MatXd expected = oracles::scm_covariance(spec.weights, spec.noise_sd);

    RowMatXd centered = x;
    centered.rowwise() -= x.colwise().mean();
    const MatXd sample_cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double se = std::sqrt((expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) /
                                        static_cast<double>(n));
            CHECK(std::abs(sample_cov(i, j) - expected(i, j)) < 3.0 * se);
        }
}

TEST_CASE("ancestral truth equals the transitive closure oracle on 100 graphs") {
    Rng rng(55);
    for (int instance = 0; instance < 100; ++instance) {
        const Index p_obs = 2 + static_cast<Index>(rng.below(15));
        const Index p_lat = static_cast<Index>(rng.below(5));
        const bool cyclic = rng.bernoulli(0.5);
        const auto spec = sim::sample_scm(p_obs, p_lat, 0.25, cyclic, 1000 + instance);
        const auto fast = sim::ancestral_truth(spec);
        const auto slow = oracles::reachability_closure(spec.weights, p_obs);
        CHECK((fast.array() == slow.array()).all());
    }
}

TEST_CASE("latent hops carry ancestry between observed variables") {
    sim::ScmSpec spec;
    spec.p_obs = 2;
    spec.p_lat = 1;
    spec.weights = MatXd::Zero(3, 3);
    spec.weights(2, 0) = 0.5;  // latent -> observed 0
    spec.weights(2, 1) = 0.5;  // latent -> observed 1
    spec.noise_sd = VecXd::Constant(3, 0.3);
    spec.noise_mean = VecXd::Constant(3, 1.0);
    const auto truth = sim::ancestral_truth(spec);
    // A shared latent parent is not ancestry between the observed pair.
    CHECK(truth.sum() == 0);

    spec.weights.setZero();
    spec.weights(0, 2) = 0.0;  // observed cannot feed latents
    spec.weights(2, 1) = 0.5;
    spec.validate();
    CHECK(sim::ancestral_truth(spec).sum() == 0);

    // Observed 0 -> latent is forbidden, so route 0 -> 1 -> (latent) -> none.
    sim::ScmSpec chain;
    chain.p_obs = 3;
    chain.p_lat = 1;
    chain.weights = MatXd::Zero(4, 4);
    chain.weights(0, 3) = 0.0;
    chain.weights(0, 1) = 0.6;
    chain.weights(3, 2) = 0.6;  // latent -> observed 2
    chain.weights(1, 2) = 0.0;
    chain.noise_sd = VecXd::Constant(4, 0.3);
    chain.noise_mean = VecXd::Constant(4, 1.0);
    const auto t2 = sim::ancestral_truth(chain);
    CHECK(t2(0, 1) == 1);
    CHECK(t2(0, 2) == 0);
    CHECK(t2(1, 0) == 0);
}

TEST_CASE("observational draws do not depend on the intervention list") {
    const auto spec = sim::sample_scm(8, 2, 0.25, false, 5);
    const auto bare = sim::simulate(spec, 50, {}, 900);
    std::vector<sim::InterventionRequest> reqs = {{0, 4, sim::PanelRole::kTrainTest},
                                                  {3, 4, sim::PanelRole::kCalibration}};
    const auto with_panels = sim::simulate(spec, 50, reqs, 900);
    CHECK((bare.observational.values.array() == with_panels.observational.values.array()).all());
}

TEST_CASE("panels group by role in request order") {
    const auto spec = sim::sample_scm(6, 0, 0.3, false, 6);
    std::vector<sim::InterventionRequest> reqs = {{0, 2, sim::PanelRole::kTrainTest},
                                                  {1, 2, sim::PanelRole::kCalibration},
                                                  {2, 2, sim::PanelRole::kTrainTest},
                                                  {3, 2, sim::PanelRole::kNuisance}};
    const auto out = sim::simulate(spec, 5, reqs, 8);
    REQUIRE(out.panels.size() == 3);
    CHECK(out.panels[0].role == sim::PanelRole::kTrainTest);
    CHECK(out.panels[0].targets == std::vector<Index>{0, 2});
    CHECK(out.panels[1].role == sim::PanelRole::kCalibration);
    CHECK(out.panels[2].role == sim::PanelRole::kNuisance);
    for (const auto& panel : out.panels)
        for (const auto& block : panel.replicates) CHECK(block.rows() == 2);
}

TEST_CASE("threshold truth flags means outside the calibration envelope") {
    sim::InterventionPanel tt;
    tt.role = sim::PanelRole::kTrainTest;
    tt.targets = {0};
    RowMatXd meas(2, 3);
    meas << 0.0, 5.0, 1.0,
            0.0, 7.0, 1.2;        // mean = (0, 6, 1.1)
    tt.replicates = {meas};

    sim::InterventionPanel cal;
    cal.role = sim::PanelRole::kCalibration;
    cal.targets = {1, 2};
    RowMatXd c1(2, 3), c2(2, 3);
    c1 << -1.0, 2.0, 0.9,
           1.0, 4.0, 1.3;
    c2 << -0.5, 3.0, 0.8,
           0.5, 3.5, 1.4;         // envelope: [-1,1] x [2,4] x [0.8,1.4]
    cal.replicates = {c1, c2};

    const auto truth = sim::threshold_truth(tt, cal);
    REQUIRE(truth.labels.rows() == 1);
    CHECK(truth.sources == std::vector<Index>{0});
    CHECK(truth.labels(0, 0) == 0);  // 0 inside [-1,1]
    CHECK(truth.labels(0, 1) == 1);  // 6 outside [2,4]
    CHECK(truth.labels(0, 2) == 0);  // 1.1 inside [0.8,1.4]

    sim::InterventionPanel empty_cal;
    CHECK_THROWS_AS(sim::threshold_truth(tt, empty_cal), std::invalid_argument);
}

TEST_CASE("promiscuous responders are excluded") {
    sim::ThresholdTruth truth;
    truth.sources = {0, 1, 2, 3};
    truth.labels = Mat<std::int32_t>::Zero(4, 3);
    // Variable 1 responds to 3 of 4 interventions, variable 2 to one.
    truth.labels(0, 1) = truth.labels(1, 1) = truth.labels(2, 1) = 1;
    truth.labels(3, 2) = 1;
    const auto kept = sim::exclude_promiscuous(truth, 0.5);
    CHECK(kept == std::vector<Index>{0, 2});
    CHECK_THROWS_AS(sim::exclude_promiscuous(truth, 0.0), std::invalid_argument);
}

TEST_CASE("a knockdown factor near one leaves a root target at its usual level") {
    auto spec = two_node_chain(0.7);
    spec.intervention_model.knockdown_factor = 0.9999;
    const VecXd mu = sim::observational_means(spec);
    const Index n = 20000;
    std::vector<sim::InterventionRequest> reqs = {{0, n, sim::PanelRole::kTrainTest}};
    const auto out = sim::simulate(spec, 0, reqs, 13);
    const auto& block = out.panels.front().replicates.front();
    const double tol = 4.0 * 0.5 / std::sqrt(static_cast<double>(n)) + 1e-3;
    CHECK(std::abs(block.col(0).mean() - mu[0]) < tol);
    CHECK(std::abs(block.col(1).mean() - mu[1]) < 2.0 * tol);
}

TEST_CASE("spec validation rejects each malformed field") {
    auto spec = two_node_chain(0.5);
    CHECK_NOTHROW(spec.validate());

    auto bad = spec;
    bad.weights(0, 0) = 0.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = spec;
    bad.noise_sd[1] = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = spec;
    bad.intervention_model.knockdown_factor = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = spec;
    bad.weights(0, 1) = 2.0;  // spectral radius 0 for triangular, so force a cycle
    bad.weights(1, 0) = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    sim::ScmSpec latent_in;
    latent_in.p_obs = 1;
    latent_in.p_lat = 1;
    latent_in.weights = MatXd::Zero(2, 2);
    latent_in.weights(0, 1) = 0.5;  // observed feeding a latent
    latent_in.noise_sd = VecXd::Constant(2, 0.2);
    latent_in.noise_mean = VecXd::Zero(2);
    CHECK_THROWS_AS(latent_in.validate(), std::invalid_argument);
}

TEST_CASE("simulate validates requests") {
    const auto spec = sim::sample_scm(5, 0, 0.3, false, 2);
    std::vector<sim::InterventionRequest> bad_target = {{7, 2, sim::PanelRole::kTrainTest}};
    CHECK_THROWS_AS(sim::simulate(spec, 5, bad_target, 1), std::invalid_argument);
    std::vector<sim::InterventionRequest> bad_reps = {{0, 0, sim::PanelRole::kTrainTest}};
    CHECK_THROWS_AS(sim::simulate(spec, 5, bad_reps, 1), std::invalid_argument);
    CHECK_THROWS_AS(sim::simulate(spec, -1, {}, 1), std::invalid_argument);
}
