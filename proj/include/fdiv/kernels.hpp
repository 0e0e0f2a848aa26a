#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fdiv/errors.hpp"
#include "fdiv/types.hpp"

namespace fdivergence {

/// Isotropic RBF kernel k(a, b) = exp(-||a - b||^2 / bandwidth).
///
/// bandwidth carries units of squared data distance, so a bandwidth taken
/// from the pooled sample variance makes the kernel invariant to rescaling
/// of the data.
template <typename Scalar>
struct BasicKernelSpec {
  Scalar bandwidth;

  explicit BasicKernelSpec(Scalar bandwidth) : bandwidth(bandwidth) {
    if (!(bandwidth > Scalar(0)) || !std::isfinite(static_cast<double>(bandwidth))) {
      throw DomainError("kernel bandwidth must be positive and finite");
    }
  }

  template <typename DerivedA, typename DerivedB>
  Scalar operator()(const Eigen::MatrixBase<DerivedA>& a,
                    const Eigen::MatrixBase<DerivedB>& b) const {
    using std::exp;
    return exp(-(a - b).squaredNorm() / bandwidth);
  }
};
using KernelSpec = BasicKernelSpec<double>;

enum class BandwidthRule {
  /// Sum of per-coordinate unbiased variances (trace of the pooled covariance).
  pooled_trace,
  /// Mean of per-coordinate unbiased variances.
  pooled_coordinate_mean,
};

/// Kernel blocks over X = {x_i} (n points) and Y = {y_j} (m points), plus the
/// two fixed reductions of the MMD objective: (1/n^2) 1'Kxx 1 and (1/n) Kxy' 1.
template <typename Scalar>
struct BasicGramBlocks {
  Matrix<Scalar> kxx;
  Matrix<Scalar> kxy;
  Matrix<Scalar> kyy;
  Index n = 0;
  Index m = 0;
  Scalar kxx_mean = 0;
  Vector<Scalar> kxy_column_means;
};
using GramBlocks = BasicGramBlocks<double>;

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pooled_variance_bandwidth(const Eigen::MatrixBase<DerivedX>& x,
                                                    const Eigen::MatrixBase<DerivedY>& y,
                                                    BandwidthRule rule = BandwidthRule::pooled_trace) {
  using Scalar = typename DerivedX::Scalar;
  if (x.cols() != y.cols()) throw DimensionMismatch("samples have different dimensions");
  const Index total = x.rows() + y.rows();
  if (total < 2) throw DegenerateSample("pooled sample needs at least two points");
  const Vector<Scalar> mean = (x.colwise().sum() + y.colwise().sum()).transpose() / Scalar(total);
  Vector<Scalar> sum_sq = Vector<Scalar>::Zero(x.cols());
  for (Index i = 0; i < x.rows(); ++i) sum_sq += (x.row(i).transpose() - mean).cwiseAbs2();
  for (Index i = 0; i < y.rows(); ++i) sum_sq += (y.row(i).transpose() - mean).cwiseAbs2();
  const Vector<Scalar> variance = sum_sq / Scalar(total - 1);
  Scalar bandwidth = variance.sum();
  if (rule == BandwidthRule::pooled_coordinate_mean) bandwidth /= Scalar(variance.size());
  // Identical points still leave a variance of order (eps * |mean|)^2 after rounding.
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar floor = Scalar(1e4) * eps * eps * std::max(Scalar(1), mean.squaredNorm());
  if (!(bandwidth > floor)) {
    throw DegenerateSample("pooled sample has zero variance (all points identical)");
  }
  return bandwidth;
}

template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> kernel_matrix(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b,
                                                const BasicKernelSpec<typename DerivedA::Scalar>& spec) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.cols()) throw DimensionMismatch("kernel arguments have different dimensions");
  Matrix<Scalar> out(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) out(i, j) = spec(a.row(i), b.row(j));
  }
  return out;
}

template <typename DerivedX, typename DerivedY>
BasicGramBlocks<typename DerivedX::Scalar> gram_blocks(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
    const BasicKernelSpec<typename DerivedX::Scalar>& spec) {
  using Scalar = typename DerivedX::Scalar;
  if (x.cols() != y.cols()) throw DimensionMismatch("samples have different dimensions");
  if (x.rows() == 0 || y.rows() == 0) throw PreconditionError("samples must be nonempty");
  BasicGramBlocks<Scalar> blocks;
  blocks.n = x.rows();
  blocks.m = y.rows();
  blocks.kxx = kernel_matrix(x, x, spec);
  blocks.kxy = kernel_matrix(x, y, spec);
  blocks.kyy = kernel_matrix(y, y, spec);
  // exact symmetry regardless of how exp rounds
  blocks.kxx = (0.5 * (blocks.kxx + blocks.kxx.transpose())).eval();
  blocks.kyy = (0.5 * (blocks.kyy + blocks.kyy.transpose())).eval();
  const Scalar n = Scalar(blocks.n);
  blocks.kxx_mean = blocks.kxx.sum() / (n * n);
  blocks.kxy_column_means = blocks.kxy.colwise().sum().transpose() / n;
  return blocks;
}

/// ||(1/n) sum_i Phi(x_i) - sum_j alpha_j Phi(y_j)||^2 in the RKHS.
template <typename Scalar, typename Derived>
Scalar weighted_mmd_squared(const BasicGramBlocks<Scalar>& blocks,
                            const Eigen::MatrixBase<Derived>& alpha) {
  if (alpha.size() != blocks.m) {
    throw DimensionMismatch("weight vector length " + std::to_string(alpha.size()) +
                            " does not match sample size " + std::to_string(blocks.m));
  }
  return blocks.kxx_mean - Scalar(2) * blocks.kxy_column_means.dot(alpha) +
         alpha.dot(blocks.kyy * alpha);
}

/// Gradient of weighted_mmd_squared in alpha: 2 Kyy alpha - (2/n) Kxy' 1.
template <typename Scalar, typename Derived>
Vector<Scalar> weighted_mmd_squared_gradient(const BasicGramBlocks<Scalar>& blocks,
                                             const Eigen::MatrixBase<Derived>& alpha) {
  if (alpha.size() != blocks.m) throw DimensionMismatch("weight vector length mismatch");
  return Scalar(2) * (blocks.kyy * alpha - blocks.kxy_column_means);
}

/// Biased (V-statistic) squared MMD between the two empirical measures.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar mmd_squared_empirical(const Eigen::MatrixBase<DerivedX>& x,
                                                const Eigen::MatrixBase<DerivedY>& y,
                                                const BasicKernelSpec<typename DerivedX::Scalar>& spec) {
  using Scalar = typename DerivedX::Scalar;
  const auto blocks = gram_blocks(x, y, spec);
  const Vector<Scalar> uniform = Vector<Scalar>::Constant(blocks.m, Scalar(1) / Scalar(blocks.m));
  return weighted_mmd_squared(blocks, uniform);
}

}  // namespace fdivergence
