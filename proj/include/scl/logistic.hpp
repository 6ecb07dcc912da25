#pragma once

#include "scl/evaluate.hpp"
#include "scl/rng.hpp"
#include "scl/types.hpp"
#include "scl/util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::learn {

struct TrainingSet {
    MatXd features;                   // |T| x d
    VecXi labels;                     // {0,1}
    std::vector<Index> pair_indices;  // optional alignment with a pair set

    void validate() const {
        if (features.rows() != labels.size())
            throw std::invalid_argument("TrainingSet: features/labels size mismatch");
        if (!features.allFinite()) throw std::invalid_argument("TrainingSet: non-finite feature");
        for (Eigen::Index r = 0; r < labels.size(); ++r)
            if (labels[r] != 0 && labels[r] != 1)
                throw std::invalid_argument("TrainingSet: labels must be 0 or 1");
    }
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// Mean logistic loss plus L1 penalty on the slope coefficients.
inline double l1_logistic_objective(const MatXd& x, const VecXi& y, double intercept,
                                    const VecXd& beta, double lambda) {
    const Eigen::Index n = x.rows();
    const VecXd eta = (x * beta).array() + intercept;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r)
        loss += softplus(eta[r]) - static_cast<double>(y[r]) * eta[r];
    return loss / static_cast<double>(n) + lambda * beta.template lpNorm<1>();
}

// Gradient of the mean logistic loss (unpenalized part).
inline std::pair<double, VecXd> logistic_gradient(const MatXd& x, const VecXi& y, double intercept,
                                                  const VecXd& beta) {
    const Eigen::Index n = x.rows();
    VecXd working(n);
    const VecXd eta = (x * beta).array() + intercept;
    for (Eigen::Index r = 0; r < n; ++r)
        working[r] = sigmoid(eta[r]) - static_cast<double>(y[r]);
    working /= static_cast<double>(n);
    return {working.sum(), x.transpose() * working};
}

struct CvPoint {
    double lambda = 0.0;
    double mean_auc = 0.0;
    double se_auc = 0.0;
    int folds_used = 0;
};

struct L1LogisticModel {
    double intercept = 0.0;
    VecXd coefficients;
    double lambda = 0.0;
    std::vector<CvPoint> cv_report;
    // Penalized objective after each outer reweighting step of the final fit;
    // non-increasing by construction (step halving on the rare overshoot).
    std::vector<double> objective_trace;
};

struct L1FitOptions {
    std::vector<double> lambda_path;   // explicit path; empty selects the default
    int path_size = 50;                // geometric path [lambda_max, ratio*lambda_max]
    double lambda_min_ratio = 1e-3;
    int cv_folds = 5;
    double tol = 1e-7;                 // threshold on max_j wxx_j * delta_j^2
    int max_outer = 200;
    int max_sweeps = 10000;
    bool class_weighting = false;      // off by default; no re-weighting is reported upstream
    std::uint64_t seed = 0;
};

namespace detail {

inline double soft_threshold(double value, double amount) {
    if (value > amount) return value - amount;
    if (value < -amount) return value + amount;
    return 0.0;
}

struct PathPoint {
    double lambda = 0.0;
    double intercept = 0.0;
    VecXd beta;
};

inline VecXd sample_weights(const VecXi& y, bool class_weighting) {
    const Eigen::Index n = y.size();
    VecXd w = VecXd::Ones(n);
    if (!class_weighting) return w;
    double n_pos = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) n_pos += y[r];
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return w;
    for (Eigen::Index r = 0; r < n; ++r)
        w[r] = y[r] != 0 ? static_cast<double>(n) / (2.0 * n_pos)
                         : static_cast<double>(n) / (2.0 * n_neg);
    return w;
}

// lambda_max = max_j |Phi^T (y - ybar)| / N: the smallest penalty at which
// every slope coefficient is exactly zero.
inline double lambda_max(const MatXd& x, const VecXi& y, const VecXd& sw) {
    const Eigen::Index n = x.rows();
    const double total = sw.sum();
    double ybar = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) ybar += sw[r] * y[r];
    ybar /= total;
    VecXd centered(n);
    for (Eigen::Index r = 0; r < n; ++r) centered[r] = sw[r] * (static_cast<double>(y[r]) - ybar);
    return (x.transpose() * centered).cwiseAbs().maxCoeff() / static_cast<double>(n);
}

inline std::vector<double> default_lambda_path(double lam_max, int size, double min_ratio) {
    std::vector<double> path(static_cast<std::size_t>(size));
    if (lam_max <= 0.0) {
        std::fill(path.begin(), path.end(), 0.0);
        return path;
    }
    const double log_max = std::log(lam_max);
    const double log_min = std::log(lam_max * min_ratio);
    for (int s = 0; s < size; ++s) {
        const double frac = size == 1 ? 0.0 : static_cast<double>(s) / (size - 1);
        path[static_cast<std::size_t>(s)] = std::exp(log_max + frac * (log_min - log_max));
    }
    path.front() = lam_max;  // exact endpoint
    return path;
}

// Penalized IRLS with cyclic coordinate descent on the weighted quadratic
// approximation, warm-started along a decreasing lambda path. Active-set
// sweeps iterate the nonzero coordinates to convergence, then one full sweep
// decides whether new coordinates enter.
class PathSolver {
  public:
    PathSolver(const MatXd& x, const VecXi& y, const VecXd& sw, const L1FitOptions& opts)
        : x_(x), y_(y), sw_(sw), opts_(opts), n_(x.rows()), d_(x.cols()) {
        double pos = 0.0, total = 0.0;
        for (Eigen::Index r = 0; r < n_; ++r) {
            pos += sw_[r] * y_[r];
            total += sw_[r];
        }
        const double ybar = std::clamp(pos / total, 1e-12, 1.0 - 1e-12);
        intercept_ = std::log(ybar / (1.0 - ybar));
        beta_ = VecXd::Zero(d_);
        eta_ = VecXd::Constant(n_, intercept_);
    }

    // Fits the path with warm starts. When a tail point stops making progress
    // before its iteration budget (quasi-separable data at tiny lambda), the
    // remaining points are frozen at the last converged iterate, matching the
    // reference coordinate-descent implementations that truncate the path
    // instead of failing. `frozen_from` reports where that happened.
    std::vector<PathPoint> solve(const std::vector<double>& lambdas,
                                 std::vector<double>* trace_for_last = nullptr,
                                 std::size_t* frozen_from = nullptr) {
        std::vector<PathPoint> points;
        points.reserve(lambdas.size());
        if (frozen_from != nullptr) *frozen_from = lambdas.size();
        for (std::size_t s = 0; s < lambdas.size(); ++s) {
            const bool want_trace = trace_for_last != nullptr && s + 1 == lambdas.size();
            const VecXd beta_snapshot = beta_;
            const double intercept_snapshot = intercept_;
            if (!fit_single(lambdas[s], want_trace ? trace_for_last : nullptr)) {
                if (s == 0) throw_no_convergence(lambdas[s]);
                beta_ = beta_snapshot;
                intercept_ = intercept_snapshot;
                eta_ = (x_ * beta_).array() + intercept_;
                if (frozen_from != nullptr) *frozen_from = s;
                for (std::size_t t = s; t < lambdas.size(); ++t)
                    points.push_back({lambdas[t], intercept_, beta_});
                break;
            }
            points.push_back({lambdas[s], intercept_, beta_});
        }
        return points;
    }

    bool fit_single(double lambda, std::vector<double>* trace) {
        if (trace) {
            trace->clear();
            trace->push_back(objective(lambda));
        }
        bool converged = false;
        int stall_strikes = 0;
        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            const double obj_before = objective(lambda);
            const VecXd beta_before = beta_;
            const double intercept_before = intercept_;

            compute_working_set();
            cd_inner(lambda);

            // Proximal-Newton safeguard: halve toward the previous iterate on
            // the rare non-descent step so the objective trace stays monotone.
            double obj_after = objective(lambda);
            int halvings = 0;
            while (obj_after > obj_before + 1e-15 && halvings < 40) {
                beta_ = 0.5 * (beta_ + beta_before);
                intercept_ = 0.5 * (intercept_ + intercept_before);
                eta_ = (x_ * beta_).array() + intercept_;
                obj_after = objective(lambda);
                ++halvings;
            }
            if (trace) trace->push_back(std::min(obj_after, obj_before));

            // Net weighted squared movement of this reweighting step, judged
            // with the current curvature.
            const double db = intercept_ - intercept_before;
            double outer_change = (w_sum_ / static_cast<double>(n_)) * db * db;
            for (Eigen::Index j = 0; j < d_; ++j) {
                const double delta = beta_[j] - beta_before[j];
                if (delta != 0.0)
                    outer_change = std::max(outer_change, weighted_xx(j) * delta * delta);
            }
            if (outer_change < opts_.tol) {
                converged = true;
                break;
            }
            // The objective is convex and the trace monotone, so two straight
            // steps below working precision mean the remaining gap is noise.
            const bool stalled =
                obj_before - obj_after < 1e-9 * (1.0 + std::abs(obj_before)) || halvings >= 40;
            stall_strikes = stalled ? stall_strikes + 1 : 0;
            if (stall_strikes >= 2) {
                converged = true;
                break;
            }
        }
        return converged;
    }

    [[noreturn]] void throw_no_convergence(double lambda) const {
        throw std::runtime_error(
            "fit_l1_logistic: no convergence after " + std::to_string(opts_.max_outer) +
            " reweighting steps at lambda=" + format_short(lambda) +
            " (n=" + std::to_string(n_) + ", d=" + std::to_string(d_) + ")");
    }

    double intercept() const { return intercept_; }
    const VecXd& beta() const { return beta_; }

  private:
    double objective(double lambda) const {
        double loss = 0.0;
        for (Eigen::Index r = 0; r < n_; ++r)
            loss += sw_[r] * (softplus(eta_[r]) - static_cast<double>(y_[r]) * eta_[r]);
        return loss / static_cast<double>(n_) + lambda * beta_.template lpNorm<1>();
    }

    // Saturated probabilities are snapped to {0, 1} with the Newton curvature
    // floored, so correctly classified extreme samples carry zero residual and
    // stop stalling the reweighting loop on near-separable data.
    void compute_working_set() {
        constexpr double kMuEps = 1e-5;
        w_.resize(n_);
        z_minus_eta_.resize(n_);
        for (Eigen::Index r = 0; r < n_; ++r) {
            double mu = sigmoid(eta_[r]);
            double curvature;
            if (mu < kMuEps) {
                mu = 0.0;
                curvature = kMuEps;
            } else if (mu > 1.0 - kMuEps) {
                mu = 1.0;
                curvature = kMuEps;
            } else {
                curvature = mu * (1.0 - mu);
            }
            w_[r] = curvature * sw_[r];
            z_minus_eta_[r] = (static_cast<double>(y_[r]) - mu) / curvature;
        }
        residual_ = z_minus_eta_;  // r = z - eta at the current coefficients
        w_sum_ = w_.sum();
        wxx_version_.assign(static_cast<std::size_t>(d_), false);
        wxx_.resize(d_);
    }

    double weighted_xx(Eigen::Index j) {
        if (!wxx_version_[static_cast<std::size_t>(j)]) {
            wxx_[j] = x_.col(j).cwiseAbs2().dot(w_) / static_cast<double>(n_);
            wxx_version_[static_cast<std::size_t>(j)] = true;
        }
        return wxx_[j];
    }

    // One coordinate update; returns the weighted squared change
    // wxx_j * delta^2, the quantity the convergence threshold is applied to.
    double update_coordinate(Eigen::Index j, double lambda) {
        const double denom = weighted_xx(j);
        if (denom <= 0.0) return 0.0;
        const double inner = x_.col(j).dot(w_.cwiseProduct(residual_)) / static_cast<double>(n_);
        const double candidate = inner + denom * beta_[j];
        const double updated = soft_threshold(candidate, lambda) / denom;
        const double delta = updated - beta_[j];
        if (delta != 0.0) {
            residual_ -= delta * x_.col(j);
            beta_[j] = updated;
        }
        return denom * delta * delta;
    }

    double update_intercept() {
        const double delta = w_.dot(residual_) / w_sum_;
        if (delta != 0.0) {
            intercept_ += delta;
            residual_.array() -= delta;
        }
        return (w_sum_ / static_cast<double>(n_)) * delta * delta;
    }

    // Coordinate descent on the current quadratic until the largest weighted
    // squared update falls below tol.
    void cd_inner(double lambda) {
        for (int sweep = 0; sweep < opts_.max_sweeps; ++sweep) {
            // Converge on the active set first.
            for (int inner = 0; inner < opts_.max_sweeps; ++inner) {
                double change = update_intercept();
                for (Eigen::Index j = 0; j < d_; ++j)
                    if (beta_[j] != 0.0) change = std::max(change, update_coordinate(j, lambda));
                if (change < opts_.tol) break;
            }
            // Full sweep; if nothing beyond tolerance moves, the set is stable.
            double change = update_intercept();
            for (Eigen::Index j = 0; j < d_; ++j)
                change = std::max(change, update_coordinate(j, lambda));
            if (change < opts_.tol) break;
        }
        eta_ = z_from_residual();
    }

    VecXd z_from_residual() const {
        // eta = z - r, and z - eta was stored before CD started.
        VecXd eta(n_);
        for (Eigen::Index r = 0; r < n_; ++r) eta[r] = (z_minus_eta_[r] - residual_[r]) + eta_[r];
        return eta;
    }

    const MatXd& x_;
    const VecXi& y_;
    const VecXd& sw_;
    L1FitOptions opts_;
    Eigen::Index n_ = 0;
    Eigen::Index d_ = 0;

    double intercept_ = 0.0;
    VecXd beta_;
    VecXd eta_;
    VecXd w_;
    VecXd residual_;
    VecXd z_minus_eta_;
    double w_sum_ = 0.0;
    VecXd wxx_;
    std::vector<bool> wxx_version_;
};

// Stratified fold ids: positives and negatives are shuffled separately and
// dealt round-robin, so every fold keeps the class mix.
inline std::vector<int> stratified_folds(const VecXi& y, int folds, std::uint64_t seed) {
    std::vector<std::int64_t> pos, neg;
    for (Eigen::Index r = 0; r < y.size(); ++r) (y[r] != 0 ? pos : neg).push_back(r);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> fold(static_cast<std::size_t>(y.size()), 0);
    for (std::size_t s = 0; s < pos.size(); ++s)
        fold[static_cast<std::size_t>(pos[s])] = static_cast<int>(s % static_cast<std::size_t>(folds));
    for (std::size_t s = 0; s < neg.size(); ++s)
        fold[static_cast<std::size_t>(neg[s])] = static_cast<int>(s % static_cast<std::size_t>(folds));
    return fold;
}

}  // namespace detail

inline VecXd predict(const L1LogisticModel& model, const Eigen::Ref<const RowMatXd>& features) {
    if (features.cols() != model.coefficients.size())
        throw std::invalid_argument("predict: feature width does not match model");
    VecXd eta = (features * model.coefficients).array() + model.intercept;
    for (Eigen::Index r = 0; r < eta.size(); ++r) eta[r] = sigmoid(eta[r]);
    return eta;
}

// Cyclic coordinate descent on the reweighted quadratic approximation, warm
// starts down a 50-point geometric lambda path, lambda chosen by stratified
// K-fold cross-validated AUC (ties resolved toward the sparser model).
inline L1LogisticModel fit_l1_logistic(const TrainingSet& train, const L1FitOptions& opts = {}) {
    train.validate();
    const Eigen::Index n = train.features.rows();
    const Eigen::Index d = train.features.cols();
    if (n < 2) throw std::invalid_argument("fit_l1_logistic: need at least two samples");
    if (d < 1) throw std::invalid_argument("fit_l1_logistic: need at least one feature");
    Eigen::Index n_pos = 0;
    for (Eigen::Index r = 0; r < n; ++r)
        if (train.labels[r] != 0) ++n_pos;
    if (n_pos == 0 || n_pos == n)
        throw std::invalid_argument("fit_l1_logistic: both classes must be present");

    const VecXd sw = detail::sample_weights(train.labels, opts.class_weighting);
    std::vector<double> path = opts.lambda_path;
    if (path.empty())
        path = detail::default_lambda_path(detail::lambda_max(train.features, train.labels, sw),
                                           opts.path_size, opts.lambda_min_ratio);
    std::sort(path.begin(), path.end(), std::greater<double>());

    L1LogisticModel model;
    std::size_t selected = 0;

    if (path.size() > 1) {
        const Eigen::Index n_neg = n - n_pos;
        const int folds = static_cast<int>(
            std::min<Eigen::Index>(opts.cv_folds, std::min(n_pos, n_neg)));
        if (folds < 2)
            throw std::invalid_argument(
                "fit_l1_logistic: cross-validation needs at least two samples per class; "
                "pass a single-lambda path to skip selection");
        const auto fold_of = detail::stratified_folds(train.labels, folds, mix_seed(opts.seed, 0xcf));

        // fold x lambda held-out AUC, reduced in fold order.
        std::vector<std::vector<double>> fold_auc(static_cast<std::size_t>(folds));
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> in_rows, out_rows;
            for (Eigen::Index r = 0; r < n; ++r)
                (fold_of[static_cast<std::size_t>(r)] == f ? out_rows : in_rows).push_back(r);
            MatXd x_in(static_cast<Eigen::Index>(in_rows.size()), d);
            VecXi y_in(static_cast<Eigen::Index>(in_rows.size()));
            VecXd sw_in(static_cast<Eigen::Index>(in_rows.size()));
            for (std::size_t r = 0; r < in_rows.size(); ++r) {
                x_in.row(static_cast<Eigen::Index>(r)) = train.features.row(in_rows[r]);
                y_in[static_cast<Eigen::Index>(r)] = train.labels[in_rows[r]];
                sw_in[static_cast<Eigen::Index>(r)] = sw[in_rows[r]];
            }
            MatXd x_out(static_cast<Eigen::Index>(out_rows.size()), d);
            VecXi y_out(static_cast<Eigen::Index>(out_rows.size()));
            for (std::size_t r = 0; r < out_rows.size(); ++r) {
                x_out.row(static_cast<Eigen::Index>(r)) = train.features.row(out_rows[r]);
                y_out[static_cast<Eigen::Index>(r)] = train.labels[out_rows[r]];
            }

            detail::PathSolver solver(x_in, y_in, sw_in, opts);
            const auto points = solver.solve(path);
            auto& aucs = fold_auc[static_cast<std::size_t>(f)];
            aucs.reserve(points.size());
            const bool scorable = y_out.minCoeff() == 0 && y_out.maxCoeff() == 1;
            for (const auto& point : points) {
                if (!scorable) {
                    aucs.push_back(std::numeric_limits<double>::quiet_NaN());
                    continue;
                }
                VecXd scores = (x_out * point.beta).array() + point.intercept;
                aucs.push_back(eval::auc<double>(scores, y_out));
            }
        }

        model.cv_report.resize(path.size());
        double best = -1.0;
        for (std::size_t s = 0; s < path.size(); ++s) {
            double sum = 0.0, sum_sq = 0.0;
            int used = 0;
            for (int f = 0; f < folds; ++f) {
                const double a = fold_auc[static_cast<std::size_t>(f)][s];
                if (std::isnan(a)) continue;
                sum += a;
                sum_sq += a * a;
                ++used;
            }
            auto& rec = model.cv_report[s];
            rec.lambda = path[s];
            rec.folds_used = used;
            rec.mean_auc = used > 0 ? sum / used : 0.5;
            rec.se_auc = used > 1
                ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / used) / (used - 1)) / used)
                : 0.0;
            if (rec.mean_auc > best + 1e-12) {  // ties keep the larger lambda
                best = rec.mean_auc;
                selected = s;
            }
        }
    } else {
        model.cv_report.push_back({path.front(), 0.0, 0.0, 0});
    }

    // Final fit on all data, warm-started down to the selected lambda. The
    // selected point itself must converge; a frozen tail only ever stands in
    // for unselected candidates during cross-validation.
    std::vector<double> fit_path(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(selected + 1));
    detail::PathSolver solver(train.features, train.labels, sw, opts);
    std::size_t frozen_from = 0;
    const auto points = solver.solve(fit_path, &model.objective_trace, &frozen_from);
    if (frozen_from < fit_path.size()) solver.throw_no_convergence(fit_path.back());
    model.intercept = points.back().intercept;
    model.coefficients = points.back().beta;
    model.lambda = path[selected];
    return model;
}

}  // namespace scl::learn
