#pragma once

#include "scl/rng.hpp"
#include "scl/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::sim {

struct InterventionModel {
    double knockdown_factor = 0.1;  // gamma: residual expression scale under knockdown
    double shift = 0.0;             // delta: additive offset of the knocked-down mechanism
};

// Linear structural causal model over observed + latent variables. Variables
// 0..p_obs-1 are observed, the rest latent. weights(a, b) is the direct effect
// of a on b. Noise enters as e_a = noise_mean[a] + noise_sd[a] * z_a.
struct ScmSpec {
    Index p_obs = 0;
    Index p_lat = 0;
    MatXd weights;
    VecXd noise_sd;
    VecXd noise_mean;
    InterventionModel intervention_model;

    Index total() const { return p_obs + p_lat; }
    void validate() const;
};

inline double spectral_radius(const MatXd& w) {
    if (w.rows() == 0) return 0.0;
    Eigen::EigenSolver<MatXd> solver(w, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline void ScmSpec::validate() const {
    if (p_obs < 1) throw std::invalid_argument("ScmSpec: need at least one observed variable");
    if (p_lat < 0) throw std::invalid_argument("ScmSpec: negative latent count");
    const Index p = total();
    if (weights.rows() != p || weights.cols() != p)
        throw std::invalid_argument("ScmSpec: weight matrix must be (p_obs+p_lat) square");
    if (noise_sd.size() != p || noise_mean.size() != p)
        throw std::invalid_argument("ScmSpec: noise vectors must cover every variable");
    if (!weights.allFinite() || !noise_sd.allFinite() || !noise_mean.allFinite())
        throw std::invalid_argument("ScmSpec: non-finite parameter");
    for (Index a = 0; a < p; ++a) {
        if (weights(a, a) != 0.0) throw std::invalid_argument("ScmSpec: nonzero self-loop weight");
        if (noise_sd[a] < 0.0) throw std::invalid_argument("ScmSpec: negative noise scale");
    }
    for (Index a = 0; a < p_obs; ++a)
        for (Index b = p_obs; b < p; ++b)
            if (weights(a, b) != 0.0)
                throw std::invalid_argument("ScmSpec: latent variables take no observed inputs");
    const double gamma = intervention_model.knockdown_factor;
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("ScmSpec: knockdown_factor must lie in (0, 1)");
    if (spectral_radius(weights) >= 0.95)
        throw std::invalid_argument("ScmSpec: spectral radius must stay below 0.95");
}

// Distribution bounds for random SCM generation.
struct SamplerRanges {
    double weight_min = 0.3;
    double weight_max = 0.9;
    double noise_sd_min = 0.2;
    double noise_sd_max = 0.25;
    double noise_mean_min = 4.0;
    double noise_mean_max = 8.0;
};

// Edges are sampled independently with probability edge_density; acyclic
// graphs restrict edges to a random topological order. Weight magnitudes and
// noise moments are uniform on the given ranges with random weight signs;
// cyclic weight matrices are rescaled under the radius bound.
inline ScmSpec sample_scm(Index p_obs, Index p_lat, double edge_density, bool cyclic,
                          std::uint64_t seed, const SamplerRanges& ranges = {}) {
    if (p_obs < 1) throw std::invalid_argument("sample_scm: need at least one observed variable");
    if (p_lat < 0) throw std::invalid_argument("sample_scm: negative latent count");
    if (!(edge_density >= 0.0 && edge_density <= 1.0))
        throw std::invalid_argument("sample_scm: edge_density must lie in [0, 1]");

    const Index p = p_obs + p_lat;
    Rng rng(mix_seed(seed, 0x5c));

    std::vector<Index> position(static_cast<std::size_t>(p));
    {
        std::vector<Index> order(static_cast<std::size_t>(p));
        for (Index v = 0; v < p; ++v) order[static_cast<std::size_t>(v)] = v;
        rng.shuffle(order);
        for (Index r = 0; r < p; ++r) position[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
    }

    ScmSpec spec;
    spec.p_obs = p_obs;
    spec.p_lat = p_lat;
    spec.weights = MatXd::Zero(p, p);
    for (Index a = 0; a < p; ++a) {
        for (Index b = 0; b < p; ++b) {
            if (a == b) continue;
            if (a < p_obs && b >= p_obs) continue;  // no observed -> latent edges
            if (!cyclic &&
                position[static_cast<std::size_t>(a)] >= position[static_cast<std::size_t>(b)])
                continue;
            if (rng.uniform01() >= edge_density) continue;
            const double magnitude = rng.uniform(ranges.weight_min, ranges.weight_max);
            spec.weights(a, b) = rng.bernoulli(0.5) ? magnitude : -magnitude;
        }
    }

    spec.noise_sd.resize(p);
    spec.noise_mean.resize(p);
    for (Index a = 0; a < p; ++a)
        spec.noise_sd[a] = rng.uniform(ranges.noise_sd_min, ranges.noise_sd_max);
    for (Index a = 0; a < p; ++a)
        spec.noise_mean[a] = rng.uniform(ranges.noise_mean_min, ranges.noise_mean_max);

    if (cyclic) {
        const double radius = spectral_radius(spec.weights);
        if (radius >= 0.95) spec.weights *= 0.94 / radius;
    }
    return spec;
}

// Samples of the observed variables; intervention[r] is the observed target
// index of row r, or -1 for an observational sample.
struct DataMatrix {
    RowMatXd values;
    std::vector<Index> intervention;
};

enum class PanelRole { kTrainTest, kCalibration, kNuisance };

inline const char* panel_role_name(PanelRole role) {
    switch (role) {
        case PanelRole::kTrainTest: return "train_test";
        case PanelRole::kCalibration: return "calibration";
        case PanelRole::kNuisance: return "nuisance";
    }
    return "unknown";
}

// Replicate measurements of every observed variable, one matrix per
// intervention, aligned with targets.
struct InterventionPanel {
    PanelRole role = PanelRole::kTrainTest;
    std::vector<Index> targets;
    std::vector<RowMatXd> replicates;
};

struct InterventionRequest {
    Index target = 0;
    Index replicates = 1;
    PanelRole role = PanelRole::kTrainTest;
};

struct SimulationOutput {
    DataMatrix observational;
    std::vector<InterventionPanel> panels;  // grouped by role, first-appearance order
};

// Equilibrium mean of every variable: mu = (I - W^T)^{-1} m.
inline VecXd observational_means(const ScmSpec& spec) {
    const Index p = spec.total();
    const MatXd system = MatXd::Identity(p, p) - spec.weights.transpose();
    return Eigen::PartialPivLU<MatXd>(system).solve(spec.noise_mean);
}

namespace detail {

// One standard-normal draw per variable, in variable order, from a stream
// derived only from (seed, sample_index).
inline VecXd sample_z(const ScmSpec& spec, std::uint64_t seed, std::uint64_t sample_index) {
    Rng rng(mix_seed(seed, sample_index));
    VecXd z(spec.total());
    for (Index a = 0; a < spec.total(); ++a) z[a] = rng.normal();
    return z;
}

// Noise vector with the knockdown mechanism substituted at the target: the
// target's equation becomes x_t = gamma*mu_t + delta + sd_t * z_t, with the
// mean-centered noise keeping the mechanism at its reduced level.
inline VecXd noise_with_mechanism(const ScmSpec& spec, const VecXd& mu, Index target,
                                  const VecXd& z) {
    VecXd e(spec.total());
    for (Index a = 0; a < spec.total(); ++a)
        e[a] = spec.noise_mean[a] + spec.noise_sd[a] * z[a];
    if (target >= 0) {
        e[target] = spec.intervention_model.knockdown_factor * mu[target] +
                    spec.intervention_model.shift + spec.noise_sd[target] * z[target];
    }
    return e;
}

// I - W^T with the target's incoming edges severed (its row replaced by the
// identity row, so x_t equals its mechanism value exactly).
inline MatXd system_matrix(const ScmSpec& spec, Index target) {
    const Index p = spec.total();
    MatXd system = MatXd::Identity(p, p) - spec.weights.transpose();
    if (target >= 0) {
        system.row(target).setZero();
        system(target, target) = 1.0;
    }
    return system;
}

}  // namespace detail

// Full-variable view of a single sample, for diagnostics and tests.
struct DetailedSample {
    VecXd values;  // all observed + latent variables at equilibrium
    VecXd noise;   // the noise / mechanism vector the system was solved against
    Index target = -1;
};

inline DetailedSample simulate_detailed_sample(const ScmSpec& spec, Index target,
                                               std::uint64_t seed, std::uint64_t sample_index) {
    spec.validate();
    if (target >= spec.p_obs)
        throw std::invalid_argument("simulate_detailed_sample: target must be observed");
    const VecXd mu = observational_means(spec);
    const VecXd z = detail::sample_z(spec, seed, sample_index);
    DetailedSample sample;
    sample.target = target < 0 ? Index{-1} : target;
    sample.noise = detail::noise_with_mechanism(spec, mu, sample.target, z);
    sample.values =
        Eigen::PartialPivLU<MatXd>(detail::system_matrix(spec, sample.target)).solve(sample.noise);
    return sample;
}

// Observational samples first, then the requested interventions in order,
// replicate by replicate; each sample's noise stream depends only on the seed
// and its global sample index, so any regrouping leaves the data unchanged.
inline SimulationOutput simulate(const ScmSpec& spec, Index n_obs,
                                 const std::vector<InterventionRequest>& requests,
                                 std::uint64_t seed) {
    spec.validate();
    if (n_obs < 0) throw std::invalid_argument("simulate: negative sample count");
    for (const auto& request : requests) {
        if (request.target < 0 || request.target >= spec.p_obs)
            throw std::invalid_argument("simulate: intervention target must be an observed variable");
        if (request.replicates < 1)
            throw std::invalid_argument("simulate: replicates must be positive");
    }

    const VecXd mu = observational_means(spec);
    SimulationOutput out;
    std::uint64_t counter = 0;

    {
        Eigen::PartialPivLU<MatXd> lu(detail::system_matrix(spec, -1));
        out.observational.values.resize(n_obs, spec.p_obs);
        out.observational.intervention.assign(static_cast<std::size_t>(n_obs), -1);
        for (Index r = 0; r < n_obs; ++r, ++counter) {
            const VecXd z = detail::sample_z(spec, seed, counter);
            const VecXd x = lu.solve(detail::noise_with_mechanism(spec, mu, -1, z));
            out.observational.values.row(r) = x.head(spec.p_obs).transpose();
        }
    }

    auto panel_for = [&out](PanelRole role) -> InterventionPanel& {
        for (auto& panel : out.panels)
            if (panel.role == role) return panel;
        out.panels.push_back(InterventionPanel{role, {}, {}});
        return out.panels.back();
    };

    for (const auto& request : requests) {
        Eigen::PartialPivLU<MatXd> lu(detail::system_matrix(spec, request.target));
        RowMatXd block(request.replicates, spec.p_obs);
        for (Index r = 0; r < request.replicates; ++r, ++counter) {
            const VecXd z = detail::sample_z(spec, seed, counter);
            const VecXd x = lu.solve(detail::noise_with_mechanism(spec, mu, request.target, z));
            block.row(r) = x.head(spec.p_obs).transpose();
        }
        auto& panel = panel_for(request.role);
        panel.targets.push_back(request.target);
        panel.replicates.push_back(std::move(block));
    }
    return out;
}

// Reachability over the weight support graph: entry (i, j) = 1 iff a directed
// path runs from observed i to observed j, latent hops included.
inline Mat<std::int32_t> ancestral_truth(const ScmSpec& spec) {
    spec.validate();
    const Index p = spec.total();
    std::vector<std::vector<Index>> adjacency(static_cast<std::size_t>(p));
    for (Index a = 0; a < p; ++a)
        for (Index b = 0; b < p; ++b)
            if (spec.weights(a, b) != 0.0) adjacency[static_cast<std::size_t>(a)].push_back(b);

    Mat<std::int32_t> truth = Mat<std::int32_t>::Zero(spec.p_obs, spec.p_obs);
    std::vector<char> seen(static_cast<std::size_t>(p));
    std::vector<Index> stack;
    for (Index i = 0; i < spec.p_obs; ++i) {
        std::fill(seen.begin(), seen.end(), 0);
        stack.assign(1, i);
        seen[static_cast<std::size_t>(i)] = 1;
        while (!stack.empty()) {
            const Index v = stack.back();
            stack.pop_back();
            for (Index next : adjacency[static_cast<std::size_t>(v)]) {
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = 1;
                stack.push_back(next);
                if (next < spec.p_obs && next != i) truth(i, next) = 1;
            }
        }
    }
    return truth;
}

// Panel-threshold ground truth: labels(s, j) = 1 iff the replicate mean of
// x_j under the s-th train/test intervention falls strictly outside the
// min-max envelope of every calibration measurement of x_j.
struct ThresholdTruth {
    std::vector<Index> sources;
    Mat<std::int32_t> labels;  // sources.size() x p_obs
};

inline ThresholdTruth threshold_truth(const InterventionPanel& train_test,
                                      const InterventionPanel& calibration) {
    if (train_test.targets.size() != train_test.replicates.size() ||
        calibration.targets.size() != calibration.replicates.size())
        throw std::invalid_argument("threshold_truth: panel targets/replicates misaligned");
    if (calibration.replicates.empty())
        throw std::invalid_argument("threshold_truth: calibration panel is empty");

    const Index p_obs = calibration.replicates.front().cols();
    for (const auto& block : calibration.replicates)
        if (block.cols() != p_obs || block.rows() < 1)
            throw std::invalid_argument("threshold_truth: calibration panel must cover every variable");
    for (const auto& block : train_test.replicates)
        if (block.cols() != p_obs || block.rows() < 1)
            throw std::invalid_argument("threshold_truth: train/test panel must cover every variable");

    VecXd lo = VecXd::Constant(p_obs, std::numeric_limits<double>::infinity());
    VecXd hi = VecXd::Constant(p_obs, -std::numeric_limits<double>::infinity());
    for (const auto& block : calibration.replicates) {
        lo = lo.cwiseMin(block.colwise().minCoeff().transpose());
        hi = hi.cwiseMax(block.colwise().maxCoeff().transpose());
    }

    ThresholdTruth truth;
    truth.sources = train_test.targets;
    truth.labels = Mat<std::int32_t>::Zero(static_cast<Index>(train_test.targets.size()), p_obs);
    for (std::size_t s = 0; s < train_test.targets.size(); ++s) {
        const VecXd mean = train_test.replicates[s].colwise().mean().transpose();
        for (Index j = 0; j < p_obs; ++j)
            if (mean[j] < lo[j] || mean[j] > hi[j])
                truth.labels(static_cast<Index>(s), j) = 1;
    }
    return truth;
}

// Variables flagged by at least max_fraction of the interventions respond too
// broadly to be trusted as endpoints; the survivors are returned.
inline std::vector<Index> exclude_promiscuous(const ThresholdTruth& truth,
                                              double max_fraction = 0.5) {
    if (!(max_fraction > 0.0 && max_fraction <= 1.0))
        throw std::invalid_argument("exclude_promiscuous: max_fraction must lie in (0, 1]");
    const Index n_int = static_cast<Index>(truth.sources.size());
    std::vector<Index> kept;
    for (Index j = 0; j < truth.labels.cols(); ++j) {
        Index count = 0;
        for (Index s = 0; s < truth.labels.rows(); ++s) count += truth.labels(s, j);
        const bool promiscuous =
            n_int > 0 && static_cast<double>(count) >= max_fraction * static_cast<double>(n_int);
        if (!promiscuous) kept.push_back(j);
    }
    return kept;
}

}  // namespace scl::sim
