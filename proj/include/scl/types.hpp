#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace scl {

using Index = std::int64_t;

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Row-major storage for matrices that are built or consumed row-by-row
// (feature rows, data samples).
template <class Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;

using MatXd = Mat<double>;
using RowMatXd = RowMat<double>;
using VecXd = Vec<double>;
using VecXi = Eigen::VectorXi;

}  // namespace scl
