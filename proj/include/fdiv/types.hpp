#pragma once

#include <Eigen/Core>

namespace fdivergence {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;
using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Row-per-point sample: n points of dimension d.
using SampleMatrix = MatrixXd;

}  // namespace fdivergence
