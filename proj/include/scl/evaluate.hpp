#pragma once

#include "scl/pairspace.hpp"
#include "scl/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::eval {

// Mann-Whitney AUC via average ranks: P(score+ > score-) + 0.5 * P(tie).
template <class Scalar>
double auc(const Eigen::Ref<const Vec<Scalar>>& scores, const VecXi& labels) {
    const Eigen::Index m = scores.size();
    if (labels.size() != m) throw std::invalid_argument("auc: scores/labels size mismatch");
    Eigen::Index n_pos = 0;
    for (Eigen::Index r = 0; r < m; ++r)
        if (labels[r] != 0) ++n_pos;
    const Eigen::Index n_neg = m - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: both classes must be present");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    Eigen::Index pos = 0;
    while (pos < m) {
        Eigen::Index end = pos;
        while (end + 1 < m && scores[order[static_cast<std::size_t>(end + 1)]] ==
                                  scores[order[static_cast<std::size_t>(pos)]])
            ++end;
        const double avg_rank = 0.5 * static_cast<double>(pos + end + 2);  // 1-based
        for (Eigen::Index t = pos; t <= end; ++t)
            if (labels[order[static_cast<std::size_t>(t)]] != 0) rank_sum_pos += avg_rank;
        pos = end + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1)
    double auc = 0.0;              // trapezoidal area
};

// One curve point per distinct score, descending; a tied block contributes a
// single segment (diagonal within the block), so the trapezoidal area equals
// the rank-based AUC exactly.
template <class Scalar>
RocCurve roc(const Eigen::Ref<const Vec<Scalar>>& scores, const VecXi& labels) {
    const Eigen::Index m = scores.size();
    if (labels.size() != m) throw std::invalid_argument("roc: scores/labels size mismatch");
    Eigen::Index n_pos = 0;
    for (Eigen::Index r = 0; r < m; ++r)
        if (labels[r] != 0) ++n_pos;
    const Eigen::Index n_neg = m - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc: both classes must be present");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    Eigen::Index tp = 0, fp = 0;
    double area = 0.0;
    Eigen::Index pos = 0;
    while (pos < m) {
        const Scalar value = scores[order[static_cast<std::size_t>(pos)]];
        Eigen::Index end = pos;
        Eigen::Index block_tp = 0, block_fp = 0;
        while (end < m && scores[order[static_cast<std::size_t>(end)]] == value) {
            if (labels[order[static_cast<std::size_t>(end)]] != 0) ++block_tp; else ++block_fp;
            ++end;
        }
        const double tpr_prev = static_cast<double>(tp) / static_cast<double>(n_pos);
        tp += block_tp;
        fp += block_fp;
        const double tpr_cur = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double fpr_prev = curve.points.back().fpr;
        const double fpr_cur = static_cast<double>(fp) / static_cast<double>(n_neg);
        area += (fpr_cur - fpr_prev) * 0.5 * (tpr_prev + tpr_cur);
        curve.points.push_back({fpr_cur, tpr_cur, static_cast<double>(value)});
        pos = end;
    }
    curve.auc = area;
    return curve;
}

// Vertical averaging: TPR interpolated on a fixed FPR grid, then averaged
// across curves.
inline RocCurve average_roc(const std::vector<RocCurve>& curves, int grid_points = 101) {
    if (curves.empty()) throw std::invalid_argument("average_roc: no curves");
    if (grid_points < 2) throw std::invalid_argument("average_roc: need at least two grid points");
    RocCurve out;
    out.points.resize(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g) {
        const double fpr = static_cast<double>(g) / static_cast<double>(grid_points - 1);
        double tpr_sum = 0.0;
        for (const auto& curve : curves) {
            const auto& pts = curve.points;
            std::size_t hi = 1;
            while (hi + 1 < pts.size() && pts[hi].fpr < fpr) ++hi;
            const auto& a = pts[hi - 1];
            const auto& b = pts[hi];
            const double span = b.fpr - a.fpr;
            tpr_sum += span <= 0.0 ? b.tpr : a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / span;
        }
        out.points[static_cast<std::size_t>(g)] = {fpr, tpr_sum / static_cast<double>(curves.size()), 0.0};
    }
    double area = 0.0;
    for (std::size_t g = 1; g < out.points.size(); ++g)
        area += (out.points[g].fpr - out.points[g - 1].fpr) * 0.5 *
                (out.points[g].tpr + out.points[g - 1].tpr);
    out.auc = area;
    return out;
}

template <class Scalar>
double pearson(const Eigen::Ref<const Vec<Scalar>>& x, const Eigen::Ref<const Vec<Scalar>>& y) {
    const Eigen::Index n = x.size();
    const double mean_x = static_cast<double>(x.mean());
    const double mean_y = static_cast<double>(y.mean());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double dx = static_cast<double>(x[t]) - mean_x;
        const double dy = static_cast<double>(y[t]) - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

namespace detail {

// Merge sort counting inversions (strict) in-place.
inline std::uint64_t count_inversions(std::vector<double>& values, std::vector<double>& scratch,
                                      std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t count = count_inversions(values, scratch, lo, mid) +
                          count_inversions(values, scratch, mid, hi);
    std::size_t a = lo, b = mid, out = lo;
    while (a < mid && b < hi) {
        if (values[b] < values[a]) {
            count += mid - a;
            scratch[out++] = values[b++];
        } else {
            scratch[out++] = values[a++];
        }
    }
    while (a < mid) scratch[out++] = values[a++];
    while (b < hi) scratch[out++] = values[b++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              values.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

inline std::uint64_t tie_pair_count(const std::vector<double>& sorted) {
    std::uint64_t total = 0;
    std::size_t pos = 0;
    while (pos < sorted.size()) {
        std::size_t end = pos;
        while (end + 1 < sorted.size() && sorted[end + 1] == sorted[pos]) ++end;
        const std::uint64_t run = end - pos + 1;
        total += run * (run - 1) / 2;
        pos = end + 1;
    }
    return total;
}

}  // namespace detail

// Kendall tau-b with tie correction, via inversion counting (O(n log n)).
template <class Scalar>
double kendall_tau_b(const Eigen::Ref<const Vec<Scalar>>& x, const Eigen::Ref<const Vec<Scalar>>& y) {
    const Eigen::Index n = x.size();
    if (y.size() != n) throw std::invalid_argument("kendall_tau_b: size mismatch");
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto xa = x[static_cast<Eigen::Index>(a)], xb = x[static_cast<Eigen::Index>(b)];
        if (xa != xb) return xa < xb;
        return y[static_cast<Eigen::Index>(a)] < y[static_cast<Eigen::Index>(b)];
    });

    const auto total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
    std::vector<double> x_sorted(static_cast<std::size_t>(n)), y_by_x(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < order.size(); ++r) {
        x_sorted[r] = static_cast<double>(x[static_cast<Eigen::Index>(order[r])]);
        y_by_x[r] = static_cast<double>(y[static_cast<Eigen::Index>(order[r])]);
    }
    const std::uint64_t ties_x = detail::tie_pair_count(x_sorted);

    // Joint ties: pairs equal in both coordinates (y runs within x runs).
    std::uint64_t ties_joint = 0;
    std::size_t pos = 0;
    while (pos < y_by_x.size()) {
        std::size_t end = pos;
        while (end + 1 < y_by_x.size() && x_sorted[end + 1] == x_sorted[pos] &&
               y_by_x[end + 1] == y_by_x[pos])
            ++end;
        const std::uint64_t run = end - pos + 1;
        ties_joint += run * (run - 1) / 2;
        pos = end + 1;
    }

    std::vector<double> scratch(y_by_x.size());
    const std::uint64_t discordant = detail::count_inversions(y_by_x, scratch, 0, y_by_x.size());
    std::vector<double> y_sorted = y_by_x;  // already sorted by the merge
    const std::uint64_t ties_y = detail::tie_pair_count(y_sorted);

    const double denom = std::sqrt(static_cast<double>(total - ties_x)) *
                         std::sqrt(static_cast<double>(total - ties_y));
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double concordant_minus_discordant =
        static_cast<double>(total) - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
        static_cast<double>(ties_joint) - 2.0 * static_cast<double>(discordant);
    return concordant_minus_discordant / denom;
}

enum class Correlation { kPearson, kKendall };

// |corr(x_i, x_j)| per pair; zero-variance columns score 0 with a warning.
template <class Scalar>
VecXd correlation_scores(const Eigen::Ref<const RowMat<Scalar>>& data,
                         const std::vector<Index>& pair_set, Correlation method) {
    const int p = static_cast<int>(data.cols());
    if (data.rows() < 3) throw std::invalid_argument("correlation_scores: need at least three samples");
    VecXd out(static_cast<Eigen::Index>(pair_set.size()));
    bool warned = false;
    for (std::size_t r = 0; r < pair_set.size(); ++r) {
        const auto [i, j] = pairs::pair_of(pair_set[r], p);
        const Vec<Scalar> xi = data.col(i);
        const Vec<Scalar> xj = data.col(j);
        const double c = method == Correlation::kPearson
                             ? pearson<Scalar>(xi, xj)
                             : kendall_tau_b<Scalar>(xi, xj);
        if (std::isnan(c)) {
            if (!warned) {
                std::cerr << "correlation_scores: zero-variance column in pair (" << i << "," << j
                          << "); scoring 0\n";
                warned = true;
            }
            out[static_cast<Eigen::Index>(r)] = 0.0;
        } else {
            out[static_cast<Eigen::Index>(r)] = std::abs(c);
        }
    }
    return out;
}

}  // namespace scl::eval
