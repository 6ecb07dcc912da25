#pragma once

#include "scl/pairspace.hpp"
#include "scl/types.hpp"
#include "scl/util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::feat {

enum class Transform { kRank, kMinMax };

struct HistogramConfig {
    int bins_per_axis = 16;
    Transform transform = Transform::kRank;

    int raw_dim() const { return bins_per_axis * bins_per_axis; }

    void validate() const {
        if (bins_per_axis < 2) throw std::invalid_argument("HistogramConfig: bins_per_axis must be >= 2");
    }

    std::uint64_t hash() const {
        std::uint64_t h = fnv1a64("hist", 0xcbf29ce484222325ULL);
        h = fnv1a64(&bins_per_axis, sizeof(bins_per_axis), h);
        const int t = static_cast<int>(transform);
        return fnv1a64(&t, sizeof(t), h);
    }
};

inline std::string transform_name(Transform t) { return t == Transform::kRank ? "rank" : "minmax"; }

inline Transform transform_from_name(const std::string& name) {
    if (name == "rank") return Transform::kRank;
    if (name == "minmax") return Transform::kMinMax;
    throw std::invalid_argument("unknown transform: " + name);
}

// Average-rank transform to (0,1]: output[t] = mean rank of x_t / n.
template <class Scalar>
Vec<Scalar> rank_transform(const Eigen::Ref<const Vec<Scalar>>& column) {
    const Eigen::Index n = column.size();
    if (n < 1) throw std::invalid_argument("rank_transform: empty column");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return column[a] < column[b]; });
    Vec<Scalar> out(n);
    Eigen::Index pos = 0;
    while (pos < n) {
        Eigen::Index end = pos;
        while (end + 1 < n && column[order[static_cast<std::size_t>(end + 1)]] ==
                                  column[order[static_cast<std::size_t>(pos)]])
            ++end;
        // 1-based ranks pos+1 .. end+1 share the average rank.
        const Scalar avg = Scalar(pos + end + 2) / Scalar(2) / Scalar(n);
        for (Eigen::Index t = pos; t <= end; ++t) out[order[static_cast<std::size_t>(t)]] = avg;
        pos = end + 1;
    }
    return out;
}

// Min-max to [0,1]; a constant column maps to 0.5 everywhere.
template <class Scalar>
Vec<Scalar> minmax_transform(const Eigen::Ref<const Vec<Scalar>>& column) {
    const Eigen::Index n = column.size();
    if (n < 1) throw std::invalid_argument("minmax_transform: empty column");
    const Scalar lo = column.minCoeff();
    const Scalar hi = column.maxCoeff();
    if (hi == lo) return Vec<Scalar>::Constant(n, Scalar(0.5));
    return ((column.array() - lo) / (hi - lo)).matrix();
}

template <class Scalar>
Vec<Scalar> apply_transform(const Eigen::Ref<const Vec<Scalar>>& column, Transform transform) {
    return transform == Transform::kRank ? rank_transform<Scalar>(column)
                                         : minmax_transform<Scalar>(column);
}

// Bin index on the unit interval; values at 1 land in the last bin.
inline int bin_of(double value, int bins) {
    const int b = static_cast<int>(value * bins);
    return std::clamp(b, 0, bins - 1);
}

// Normalized bivariate histogram over [0,1]^2 of the already-transformed
// samples, flattened row-major over (bin_i, bin_j). Entries sum to 1.
template <class Scalar>
Vec<Scalar> bivariate_histogram(const Eigen::Ref<const Vec<Scalar>>& xi,
                                const Eigen::Ref<const Vec<Scalar>>& xj,
                                const HistogramConfig& cfg) {
    cfg.validate();
    if (xi.size() != xj.size()) throw std::invalid_argument("bivariate_histogram: length mismatch");
    if (xi.size() == 0) throw std::invalid_argument("bivariate_histogram: empty input");
    const int bins = cfg.bins_per_axis;
    const Eigen::Index n = xi.size();
    Vec<Scalar> counts = Vec<Scalar>::Zero(cfg.raw_dim());
    for (Eigen::Index t = 0; t < n; ++t) {
        const int bi = bin_of(static_cast<double>(xi[t]), bins);
        const int bj = bin_of(static_cast<double>(xj[t]), bins);
        counts[bi * bins + bj] += Scalar(1);
    }
    counts /= Scalar(n);
    return counts;
}

// Per-column transforms are computed once and reduced to bin indices, so each
// pair's histogram is an O(n) integer count. Rows are written in pair-set
// order by disjoint chunks; output is bit-identical for any thread count.
template <class Scalar>
RowMat<Scalar> build_raw_features(const Eigen::Ref<const RowMat<Scalar>>& data,
                                  const std::vector<Index>& pair_set,
                                  const HistogramConfig& cfg, int threads = 1) {
    cfg.validate();
    const int p = static_cast<int>(data.cols());
    const Eigen::Index n = data.rows();
    if (p < 2) throw std::invalid_argument("build_raw_features: need at least two columns");
    if (n < 1) throw std::invalid_argument("build_raw_features: empty data");
    for (Eigen::Index t = 0; t < n; ++t)
        for (int v = 0; v < p; ++v)
            if (!std::isfinite(static_cast<double>(data(t, v))))
                throw std::invalid_argument("build_raw_features: non-finite value at row " +
                                            std::to_string(t) + ", column " + std::to_string(v));

    const int bins = cfg.bins_per_axis;
    std::vector<std::vector<int>> bin_idx(static_cast<std::size_t>(p));
    for (int v = 0; v < p; ++v) {
        const Vec<Scalar> transformed = apply_transform<Scalar>(data.col(v), cfg.transform);
        auto& dest = bin_idx[static_cast<std::size_t>(v)];
        dest.resize(static_cast<std::size_t>(n));
        for (Eigen::Index t = 0; t < n; ++t)
            dest[static_cast<std::size_t>(t)] = bin_of(static_cast<double>(transformed[t]), bins);
    }

    const auto rows = static_cast<Eigen::Index>(pair_set.size());
    RowMat<Scalar> raw(rows, cfg.raw_dim());
    const Scalar inv_n = Scalar(1) / Scalar(n);
    parallel_for(rows, threads, [&](std::int64_t r) {
        const auto [i, j] = pairs::pair_of(pair_set[static_cast<std::size_t>(r)], p);
        const auto& bi = bin_idx[static_cast<std::size_t>(i)];
        const auto& bj = bin_idx[static_cast<std::size_t>(j)];
        auto row = raw.row(static_cast<Eigen::Index>(r));
        row.setZero();
        for (Eigen::Index t = 0; t < n; ++t)
            row[bi[static_cast<std::size_t>(t)] * bins + bj[static_cast<std::size_t>(t)]] += Scalar(1);
        row *= inv_n;
    });
    return raw;
}

}  // namespace scl::feat
