#pragma once

#include "scl/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace scl::feat {

template <class Scalar>
struct EigenDecomposition {
    Vec<Scalar> eigenvalues;  // descending
    Mat<Scalar> eigenvectors; // column v corresponds to eigenvalues[v]
};

// Cyclic Jacobi for symmetric matrices. Sweeps rotate every off-diagonal
// entry in turn until max|a_pq| < 1e-12 * trace(A). Fully deterministic.
template <class Scalar>
EigenDecomposition<Scalar> jacobi_eigen_sym(Mat<Scalar> a, int max_sweeps = 100) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("jacobi_eigen_sym: matrix must be square");
    Mat<Scalar> v = Mat<Scalar>::Identity(n, n);
    const Scalar trace = a.trace();
    const Scalar tol = Scalar(1e-12) * (trace > Scalar(0) ? trace : Scalar(1));

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        Scalar off_max = Scalar(0);
        for (Eigen::Index p = 0; p < n - 1; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off_max = std::max(off_max, std::abs(a(p, q)));
        if (off_max < tol) break;

        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar apq = a(p, q);
                if (std::abs(apq) < tol) continue;
                const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
                const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
                const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
                const Scalar s = t * c;

                for (Eigen::Index r = 0; r < n; ++r) {
                    const Scalar arp = a(r, p);
                    const Scalar arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (Eigen::Index r = 0; r < n; ++r) {
                    const Scalar apr = a(p, r);
                    const Scalar aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
                for (Eigen::Index r = 0; r < n; ++r) {
                    const Scalar vrp = v(r, p);
                    const Scalar vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

    EigenDecomposition<Scalar> out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        out.eigenvalues[c] = a(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]);
        out.eigenvectors.col(c) = v.col(order[static_cast<std::size_t>(c)]);
    }
    return out;
}

// Fitted PCA transform: rows of `components` are orthonormal eigenvectors of
// the sample covariance in descending eigenvalue order.
template <class Scalar>
struct PcaModelT {
    Vec<Scalar> mean;        // length B
    Mat<Scalar> components;  // d x B
    Vec<Scalar> eigenvalues; // length d, non-increasing, >= 0

    int input_dim() const { return static_cast<int>(mean.size()); }
    int output_dim() const { return static_cast<int>(components.rows()); }
};

using PcaModel = PcaModelT<double>;

// Eigendecomposition of the B x B sample covariance of the raw rows. Each
// component's sign is fixed so its largest-magnitude coordinate is positive.
template <class Scalar>
PcaModelT<Scalar> pca_fit(const Eigen::Ref<const RowMat<Scalar>>& raw, int target_dim) {
    const Eigen::Index rows = raw.rows();
    const Eigen::Index b = raw.cols();
    if (rows < 2) throw std::invalid_argument("pca_fit: need at least two rows");
    if (target_dim < 1) throw std::invalid_argument("pca_fit: target dimension must be positive");
    const Eigen::Index d = std::min<Eigen::Index>(target_dim, b);

    PcaModelT<Scalar> model;
    model.mean = raw.colwise().mean();
    Mat<Scalar> centered = raw;
    centered.rowwise() -= model.mean.transpose();
    Mat<Scalar> cov = (centered.transpose() * centered) / Scalar(rows - 1);

    auto eig = jacobi_eigen_sym<Scalar>(std::move(cov));
    model.eigenvalues = eig.eigenvalues.head(d).cwiseMax(Scalar(0));
    model.components.resize(d, b);
    for (Eigen::Index c = 0; c < d; ++c) {
        Vec<Scalar> vec = eig.eigenvectors.col(c);
        Eigen::Index arg_max = 0;
        vec.cwiseAbs().maxCoeff(&arg_max);
        if (vec[arg_max] < Scalar(0)) vec = -vec;
        model.components.row(c) = vec.transpose();
    }
    return model;
}

// output row = components * (row - mean)
template <class Scalar, class Derived>
RowMat<Scalar> pca_transform(const PcaModelT<Scalar>& model,
                             const Eigen::MatrixBase<Derived>& raw_rows) {
    if (raw_rows.cols() != model.mean.size())
        throw std::invalid_argument("pca_transform: row length does not match model input dim");
    RowMat<Scalar> centered = raw_rows.template cast<Scalar>();
    centered.rowwise() -= model.mean.transpose();
    return centered * model.components.transpose();
}

// K x d feature matrix aligned with a pair set.
struct FeatureMatrix {
    RowMatXd values;

    Index rows() const { return values.rows(); }
    int dim() const { return static_cast<int>(values.cols()); }

    void check_finite() const {
        if (!values.allFinite()) throw std::invalid_argument("FeatureMatrix: non-finite entry");
    }
};

}  // namespace scl::feat
