#pragma once

#include "scl/rng.hpp"
#include "scl/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::pairs {

// Ordered pairs (i,j), i != j, of p variables under row-major order with the
// diagonal removed: (0,1),(0,2),...,(0,p-1),(1,0),(1,2),... The linear index
// k(i,j) and its inverse are O(1).
struct PairSpace {
    int p = 0;

    explicit PairSpace(int p_in) : p(p_in) {
        if (p < 2) throw std::invalid_argument("PairSpace: need at least two variables");
    }

    Index pair_count() const { return static_cast<Index>(p) * (p - 1); }
};

inline Index linear_index(int i, int j, int p) {
    if (p < 2) throw std::invalid_argument("linear_index: p must be >= 2");
    if (i < 0 || i >= p || j < 0 || j >= p)
        throw std::invalid_argument("linear_index: vertex out of range");
    if (i == j) throw std::invalid_argument("linear_index: i == j has no pair index");
    return static_cast<Index>(i) * (p - 1) + (j < i ? j : j - 1);
}

inline std::pair<int, int> pair_of(Index k, int p) {
    if (p < 2) throw std::invalid_argument("pair_of: p must be >= 2");
    if (k < 0 || k >= static_cast<Index>(p) * (p - 1))
        throw std::invalid_argument("pair_of: index out of range");
    const int i = static_cast<int>(k / (p - 1));
    const int r = static_cast<int>(k % (p - 1));
    return {i, r < i ? r : r + 1};
}

// Known-status training pairs, their binary labels, and the disjoint query set.
struct BackgroundKnowledge {
    std::vector<Index> train;  // sorted pair indices T
    VecXi labels;              // aligned with train, values in {0,1}
    std::vector<Index> query;  // sorted pair indices Q, disjoint from T

    void check_disjoint() const {
        std::size_t a = 0, b = 0;
        while (a < train.size() && b < query.size()) {
            if (train[a] == query[b]) throw std::invalid_argument("BackgroundKnowledge: T and Q overlap");
            if (train[a] < query[b]) ++a; else ++b;
        }
    }
};

struct PerturbationPlan {
    std::vector<Index> flipped_to_zero;  // pairs whose original label 1 became 0
    std::vector<Index> flipped_to_one;   // pairs whose original label 0 became 1
    double fraction = 0.0;               // |flipped_to_zero| / |T^(1)|

    std::vector<Index> all_perturbed() const {
        std::vector<Index> out = flipped_to_zero;
        out.insert(out.end(), flipped_to_one.begin(), flipped_to_one.end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

// y_k = truth(i(k), j(k)) for each pair index in order.
template <class Derived>
VecXi labels_from_truth(const Eigen::MatrixBase<Derived>& truth, const std::vector<Index>& pair_set) {
    const int p = static_cast<int>(truth.rows());
    if (truth.cols() != truth.rows()) throw std::invalid_argument("labels_from_truth: truth must be square");
    VecXi out(static_cast<Eigen::Index>(pair_set.size()));
    for (std::size_t n = 0; n < pair_set.size(); ++n) {
        const auto [i, j] = pair_of(pair_set[n], p);
        out[static_cast<Eigen::Index>(n)] = truth(i, j) != 0 ? 1 : 0;
    }
    return out;
}

// |T| = round-half-up(rho * |universe|); Q is the complement within universe.
inline std::pair<std::vector<Index>, std::vector<Index>> sample_random_subset(
    const std::vector<Index>& universe, double rho, std::uint64_t seed) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("sample_random: rho must lie in (0,1)");
    const auto n = static_cast<std::int64_t>(universe.size());
    const auto m = static_cast<std::int64_t>(std::floor(rho * static_cast<double>(n) + 0.5));
    Rng rng(seed);
    auto picked = rng.sample_without_replacement(n, m);
    std::vector<Index> train, query;
    train.reserve(static_cast<std::size_t>(m));
    query.reserve(universe.size() - static_cast<std::size_t>(m));
    std::size_t next = 0;
    for (std::int64_t pos = 0; pos < n; ++pos) {
        if (next < picked.size() && picked[next] == pos) {
            train.push_back(universe[static_cast<std::size_t>(pos)]);
            ++next;
        } else {
            query.push_back(universe[static_cast<std::size_t>(pos)]);
        }
    }
    return {std::move(train), std::move(query)};
}

inline std::pair<std::vector<Index>, std::vector<Index>> sample_random(
    const PairSpace& pspace, double rho, std::uint64_t seed) {
    std::vector<Index> universe(static_cast<std::size_t>(pspace.pair_count()));
    for (std::size_t k = 0; k < universe.size(); ++k) universe[k] = static_cast<Index>(k);
    return sample_random_subset(universe, rho, seed);
}

struct InterventionwiseSplit {
    std::vector<int> train_sources;  // I'
    std::vector<Index> train;        // T = pairs with source in I'
    std::vector<Index> query;        // Q = pairs with source in I \ I'
};

// Train/test split at the level of intervention targets: both T and Q contain
// only pairs whose source variable carries an intervention, and no query
// source appears in any training pair.
inline InterventionwiseSplit sample_interventionwise(
    const std::vector<int>& interventions, int n_train, int p, std::uint64_t seed) {
    const int n_int = static_cast<int>(interventions.size());
    if (n_train <= 0 || n_train >= n_int)
        throw std::invalid_argument("sample_interventionwise: n_train must lie in (0, |I|)");
    Rng rng(seed);
    auto chosen = rng.sample_without_replacement(n_int, n_train);
    std::vector<char> is_train(static_cast<std::size_t>(n_int), 0);
    for (auto pos : chosen) is_train[static_cast<std::size_t>(pos)] = 1;

    InterventionwiseSplit split;
    for (int idx = 0; idx < n_int; ++idx) {
        const int src = interventions[static_cast<std::size_t>(idx)];
        auto& dest = is_train[static_cast<std::size_t>(idx)] ? split.train : split.query;
        if (is_train[static_cast<std::size_t>(idx)]) split.train_sources.push_back(src);
        for (int j = 0; j < p; ++j) {
            if (j == src) continue;
            dest.push_back(linear_index(src, j, p));
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.query.begin(), split.query.end());
    std::sort(split.train_sources.begin(), split.train_sources.end());
    return split;
}

// Flip floor(f * |T^(1)|) positives to 0 and the same number of negatives to 1,
// so the label mean over T is exactly preserved.
inline std::pair<VecXi, PerturbationPlan> perturb_labels(
    const std::vector<Index>& train, const VecXi& labels, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("perturb_labels: fraction must lie in [0,1]");
    if (static_cast<std::size_t>(labels.size()) != train.size())
        throw std::invalid_argument("perturb_labels: labels/train size mismatch");
    std::vector<std::size_t> pos, neg;
    for (std::size_t n = 0; n < train.size(); ++n)
        (labels[static_cast<Eigen::Index>(n)] != 0 ? pos : neg).push_back(n);
    const auto m = static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(pos.size())));
    if (static_cast<std::int64_t>(neg.size()) < m)
        throw std::invalid_argument("perturb_labels: not enough negatives to preserve sparsity");

    Rng rng(seed);
    auto pos_pick = rng.sample_without_replacement(static_cast<std::int64_t>(pos.size()), m);
    auto neg_pick = rng.sample_without_replacement(static_cast<std::int64_t>(neg.size()), m);

    VecXi perturbed = labels;
    PerturbationPlan plan;
    plan.fraction = pos.empty() ? 0.0 : static_cast<double>(m) / static_cast<double>(pos.size());
    for (auto sel : pos_pick) {
        const std::size_t row = pos[static_cast<std::size_t>(sel)];
        perturbed[static_cast<Eigen::Index>(row)] = 0;
        plan.flipped_to_zero.push_back(train[row]);
    }
    for (auto sel : neg_pick) {
        const std::size_t row = neg[static_cast<std::size_t>(sel)];
        perturbed[static_cast<Eigen::Index>(row)] = 1;
        plan.flipped_to_one.push_back(train[row]);
    }
    std::sort(plan.flipped_to_zero.begin(), plan.flipped_to_zero.end());
    std::sort(plan.flipped_to_one.begin(), plan.flipped_to_one.end());
    return {std::move(perturbed), std::move(plan)};
}

// Keep ceil(g * |T^(1)|) randomly chosen positives; everything else in T
// becomes 0 ("all other pairs non-causal").
inline VecXi sparsify_positives(const VecXi& labels, double keep_fraction, std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("sparsify_positives: fraction must lie in (0,1]");
    std::vector<Eigen::Index> pos;
    for (Eigen::Index n = 0; n < labels.size(); ++n)
        if (labels[n] != 0) pos.push_back(n);
    const auto m = static_cast<std::int64_t>(std::ceil(keep_fraction * static_cast<double>(pos.size())));
    Rng rng(seed);
    auto keep = rng.sample_without_replacement(static_cast<std::int64_t>(pos.size()), m);
    VecXi out = VecXi::Zero(labels.size());
    for (auto sel : keep) out[pos[static_cast<std::size_t>(sel)]] = 1;
    return out;
}

// Control variant: the same number of ones as sparsify_positives would keep,
// but placed uniformly at random over all of T.
inline VecXi sparsify_positives_random_control(const VecXi& labels, double keep_fraction, std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("sparsify_positives_random_control: fraction must lie in (0,1]");
    std::int64_t n_pos = 0;
    for (Eigen::Index n = 0; n < labels.size(); ++n)
        if (labels[n] != 0) ++n_pos;
    const auto m = static_cast<std::int64_t>(std::ceil(keep_fraction * static_cast<double>(n_pos)));
    Rng rng(seed);
    auto placed = rng.sample_without_replacement(labels.size(), m);
    VecXi out = VecXi::Zero(labels.size());
    for (auto row : placed) out[static_cast<Eigen::Index>(row)] = 1;
    return out;
}

}  // namespace scl::pairs
