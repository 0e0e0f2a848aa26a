#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "fdiv/errors.hpp"
#include "fdiv/types.hpp"

namespace fdivergence {

/// A point of the probability simplex: entries >= 0 summing to 1 within 1e-10.
template <typename Scalar>
class BasicSimplexWeights {
 public:
  static constexpr double kSumTolerance = 1e-10;

  explicit BasicSimplexWeights(Vector<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw DomainError("simplex weights must be nonempty");
    if ((weights_.array() < Scalar(0)).any() || !weights_.allFinite()) {
      throw DomainError("simplex weights must be finite and nonnegative");
    }
    if (std::abs(static_cast<double>(weights_.sum()) - 1.0) > kSumTolerance) {
      throw DomainError("simplex weights must sum to 1");
    }
  }

  static BasicSimplexWeights uniform(Index m) {
    return BasicSimplexWeights(Vector<Scalar>::Constant(m, Scalar(1) / Scalar(m)));
  }

  const Vector<Scalar>& weights() const { return weights_; }
  Index size() const { return weights_.size(); }
  Scalar operator[](Index i) const { return weights_[i]; }

 private:
  Vector<Scalar> weights_;
};
using SimplexWeights = BasicSimplexWeights<double>;

template <typename Scalar>
struct SolverOptions {
  Scalar tol = Scalar(1e-8);
  int max_iters = 50000;
  Scalar armijo = Scalar(1e-4);
  Scalar initial_step = Scalar(1);
  Scalar min_step = Scalar(1e-30);
  Scalar max_step = Scalar(1e12);
  /// Stop after this many consecutive accepted steps with relative decrease below
  /// stall_decrease that also fail to improve the best KKT residual.
  int stall_steps = 100;
  Scalar stall_decrease = Scalar(1e-15);
  bool record_trace = true;
};

template <typename Scalar>
struct SolverReport {
  int iterations = 0;
  Scalar final_objective = 0;
  Scalar kkt_residual = std::numeric_limits<Scalar>::infinity();
  bool converged = false;
  /// Objective after each accepted step, starting at the initial point.
  std::vector<Scalar> objective_trace;
};

template <typename Scalar>
struct SimplexSolution {
  BasicSimplexWeights<Scalar> weights;
  SolverReport<Scalar> report;
};

template <typename Scalar>
struct NonnegSolution {
  Vector<Scalar> weights;
  SolverReport<Scalar> report;
};

/// Objective callback: returns the value at alpha and writes the gradient.
template <typename Scalar>
using Objective = std::function<Scalar(const Vector<Scalar>& alpha, Vector<Scalar>& gradient)>;

/// Euclidean projection onto the probability simplex (sorted-threshold rule).
template <typename Derived>
BasicSimplexWeights<typename Derived::Scalar> project_to_simplex(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Index m = v.size();
  if (m == 0) throw DomainError("cannot project an empty vector");
  if (!v.allFinite()) throw DomainError("cannot project a non-finite vector");
  const Vector<Scalar> dense = v;
  std::vector<Scalar> sorted(dense.data(), dense.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar running = 0;
  Scalar threshold = 0;
  for (Index j = 0; j < m; ++j) {
    running += sorted[j];
    const Scalar candidate = (running - Scalar(1)) / Scalar(j + 1);
    if (sorted[j] - candidate > Scalar(0)) threshold = candidate;
  }
  Vector<Scalar> out = (dense.array() - threshold).max(Scalar(0)).matrix();
  out /= out.sum();
  return BasicSimplexWeights<Scalar>(std::move(out));
}

/// ||alpha - P(alpha - grad)||_inf, zero exactly at KKT points of a simplex-constrained problem.
template <typename Scalar>
Scalar simplex_stationarity(const Vector<Scalar>& alpha, const Vector<Scalar>& gradient) {
  const Vector<Scalar> step = alpha - gradient;
  return (alpha - project_to_simplex(step).weights()).cwiseAbs().maxCoeff();
}

/// max_i |min(alpha_i, grad_i)|, zero exactly at KKT points over alpha >= 0.
template <typename Scalar>
Scalar nonneg_stationarity(const Vector<Scalar>& alpha, const Vector<Scalar>& gradient) {
  return alpha.cwiseMin(gradient).cwiseAbs().maxCoeff();
}

/// Dense Hessian of an Objective at a point.
template <typename Scalar>
using Hessian = std::function<Matrix<Scalar>(const Vector<Scalar>&)>;

namespace detail {

template <typename Scalar>
bool finite(Scalar x) {
  return std::isfinite(static_cast<double>(x));
}

// Directions along the simplex sum to zero, so centring the gradient first
// keeps the dot product accurate when the active gradients nearly agree.
template <typename Scalar>
Scalar simplex_slope(const Vector<Scalar>& alpha, const Vector<Scalar>& gradient,
                     const Vector<Scalar>& direction) {
  const Scalar centre = alpha.dot(gradient) / alpha.sum();
  return (gradient.array() - centre).matrix().dot(direction);
}

template <typename Scalar>
Scalar plain_slope(const Vector<Scalar>&, const Vector<Scalar>& gradient,
                   const Vector<Scalar>& direction) {
  return gradient.dot(direction);
}

// Small coordinates that a unit projected-gradient step would zero are set to
// the smallest normal value, which multiplicative updates can still grow.
template <typename Scalar>
Vector<Scalar> snap_simplex(const Vector<Scalar>& alpha, const Vector<Scalar>& gradient) {
  const Vector<Scalar> target = project_to_simplex(Vector<Scalar>(alpha - gradient)).weights();
  const Scalar small = Scalar(1e-3) * alpha.maxCoeff();
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  Vector<Scalar> out = alpha;
  for (Index i = 0; i < out.size(); ++i) {
    if (target[i] == Scalar(0) && out[i] <= small) out[i] = std::min(out[i], tiny);
  }
  return out / out.sum();
}

template <typename Scalar>
Vector<Scalar> snap_nonneg(const Vector<Scalar>& alpha, const Vector<Scalar>& gradient) {
  const Scalar small = Scalar(1e-3) * alpha.maxCoeff();
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  Vector<Scalar> out = alpha;
  for (Index i = 0; i < out.size(); ++i) {
    if (gradient[i] >= alpha[i] && out[i] <= small) out[i] = std::min(out[i], tiny);
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> no_snap(const Vector<Scalar>& alpha, const Vector<Scalar>&) {
  return alpha;
}

/// Shared backtracking descent loop. `propose(alpha, grad, step)` returns the
/// trial point for a given step size; `stationarity` measures the KKT residual;
/// `slope(alpha, grad, direction)` is the directional derivative along a feasible
/// direction; `snap(alpha, grad)` returns alpha with near-active coordinates
/// moved onto the boundary.
template <typename Scalar, typename Propose, typename Stationarity, typename Slope, typename Snap>
SolverReport<Scalar> descend(const Objective<Scalar>& objective, Vector<Scalar>& alpha,
                             const SolverOptions<Scalar>& options, Propose propose,
                             Stationarity stationarity, Slope slope, Snap snap) {
  if (!(options.tol > Scalar(0))) throw DomainError("solver tolerance must be positive");
  SolverReport<Scalar> report;
  Vector<Scalar> gradient(alpha.size());
  Scalar value = objective(alpha, gradient);
  if (!finite(value) || !gradient.allFinite()) {
    throw NumericFailure("objective is not finite at the initial point");
  }
  if (options.record_trace) report.objective_trace.push_back(value);
  report.kkt_residual = stationarity(alpha, gradient);

  Scalar step = options.initial_step;
  Vector<Scalar> trial_gradient(alpha.size());
  Scalar best_residual = report.kkt_residual;
  int stalled = 0;
  int it = 0;
  while (it < options.max_iters && report.kkt_residual > options.tol) {
    ++it;
    // Close to the optimum the sufficient-decrease test drowns in rounding error
    // of the objective, so a step within a few ulps of `value` is also accepted
    // when it lowers the KKT residual or passes the approximate Wolfe test.
    const Scalar noise = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                         std::max(Scalar(1), std::abs(value));
    auto acceptable = [&](const Vector<Scalar>& trial, Scalar trial_value) {
      if (!finite(trial_value) || !trial_gradient.allFinite()) return false;
      const Vector<Scalar> direction = trial - alpha;
      const Scalar predicted = slope(alpha, gradient, direction);
      if (trial_value <= value + options.armijo * predicted && trial_value <= value) return true;
      if (trial_value > value + noise) return false;
      if (predicted < Scalar(0) && slope(alpha, trial_gradient, direction) <= Scalar(-0.8) * predicted) {
        return true;
      }
      return stationarity(trial, trial_gradient) < report.kkt_residual;
    };

    bool accepted = false;
    bool backtracked = false;
    Vector<Scalar> trial = snap(alpha, gradient);
    Scalar trial_value = 0;
    if (trial != alpha) {
      trial_value = objective(trial, trial_gradient);
      accepted = finite(trial_value) && trial_gradient.allFinite() && trial_value <= value &&
                 stationarity(trial, trial_gradient) < report.kkt_residual;
    }
    while (!accepted && step >= options.min_step) {
      trial = propose(alpha, gradient, step);
      trial_value = objective(trial, trial_gradient);
      if (acceptable(trial, trial_value)) {
        accepted = true;
        break;
      }
      Scalar shrink = Scalar(0.5);
      if (finite(trial_value)) {
        // Minimiser of the quadratic through value, slope and trial_value.
        const Scalar predicted = slope(alpha, gradient, Vector<Scalar>(trial - alpha));
        const Scalar excess = trial_value - value - predicted;
        if (predicted < Scalar(0) && excess > Scalar(0)) {
          shrink = std::clamp(-predicted / (Scalar(2) * excess), Scalar(0.1), Scalar(0.5));
        }
      }
      step *= shrink;
      backtracked = true;
    }
    if (!accepted) break;

    const Scalar decrease = (value - trial_value) / std::max(Scalar(1), std::abs(value));
    alpha = std::move(trial);
    gradient.swap(trial_gradient);
    value = trial_value;
    if (options.record_trace) report.objective_trace.push_back(value);
    report.kkt_residual = stationarity(alpha, gradient);
    const bool progress = report.kkt_residual < Scalar(0.99) * best_residual;
    best_residual = std::min(best_residual, report.kkt_residual);
    stalled = (decrease < options.stall_decrease && !progress) ? stalled + 1 : 0;
    if (stalled >= options.stall_steps) break;
    if (!backtracked) step = std::min(step * Scalar(2), options.max_step);
  }
  report.iterations = it;
  report.final_objective = value;
  report.converged = report.kkt_residual <= options.tol;
  return report;
}

/// Damped Newton iterations restricted to the coordinates with alpha_i > 0,
/// optionally under the sum-to-one constraint. Steps stop short of the
/// boundary, so a coordinate heading to zero shrinks geometrically.
template <typename Scalar, typename Stationarity>
void newton_refine(const Objective<Scalar>& objective, const Hessian<Scalar>& hessian,
                   Vector<Scalar>& alpha, SolverReport<Scalar>& report,
                   const SolverOptions<Scalar>& options, bool simplex, int max_steps,
                   Stationarity stationarity) {
  Vector<Scalar> gradient(alpha.size());
  Vector<Scalar> trial_gradient(alpha.size());
  Scalar value = objective(alpha, gradient);
  report.kkt_residual = stationarity(alpha, gradient);
  for (int k = 0; k < max_steps && report.kkt_residual > options.tol; ++k) {
    std::vector<Index> free;
    for (Index i = 0; i < alpha.size(); ++i) {
      if (alpha[i] > Scalar(0)) free.push_back(i);
    }
    const Index f = Index(free.size());
    if (f == 0) break;
    const Matrix<Scalar> full = hessian(alpha);
    Matrix<Scalar> h(f, f);
    Vector<Scalar> g(f);
    for (Index a = 0; a < f; ++a) {
      g[a] = gradient[free[a]];
      for (Index b = 0; b < f; ++b) h(a, b) = full(free[a], free[b]);
    }
    const Scalar ridge = Scalar(1e-12) * (Scalar(1) + h.diagonal().cwiseAbs().maxCoeff());
    h.diagonal().array() += ridge;
    const Eigen::LDLT<Matrix<Scalar>> ldlt(h);
    if (ldlt.info() != Eigen::Success) break;
    Vector<Scalar> d = -ldlt.solve(g);
    if (simplex) {
      const Vector<Scalar> ones_solved = ldlt.solve(Vector<Scalar>::Ones(f));
      d -= (d.sum() / ones_solved.sum()) * ones_solved;
    }
    // Near the optimum the computed slope can carry the wrong sign from rounding;
    // such steps are still taken when they lower the KKT residual.
    const Scalar slope = g.dot(d);
    if (!d.allFinite()) break;

    Scalar t = 1;
    for (Index a = 0; a < f; ++a) {
      if (d[a] < Scalar(0)) t = std::min(t, Scalar(0.995) * alpha[free[a]] / -d[a]);
    }
    const Scalar noise = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                         std::max(Scalar(1), std::abs(value));
    bool accepted = false;
    for (int halvings = 0; halvings < 60 && !accepted; ++halvings, t *= Scalar(0.5)) {
      Vector<Scalar> trial = alpha;
      for (Index a = 0; a < f; ++a) trial[free[a]] = std::max(Scalar(0), alpha[free[a]] + t * d[a]);
      if (simplex) trial /= trial.sum();
      const Scalar trial_value = objective(trial, trial_gradient);
      if (!finite(trial_value) || !trial_gradient.allFinite()) continue;
      const Scalar residual = stationarity(trial, trial_gradient);
      if ((slope < Scalar(0) && trial_value <= value + options.armijo * t * slope) ||
          (trial_value <= value + noise && residual < report.kkt_residual)) {
        alpha = std::move(trial);
        gradient.swap(trial_gradient);
        value = trial_value;
        report.kkt_residual = residual;
        if (options.record_trace) report.objective_trace.push_back(value);
        accepted = true;
      }
    }
    if (!accepted) break;
    ++report.iterations;
  }
  report.final_objective = value;
  report.converged = report.kkt_residual <= options.tol;
}

}  // namespace detail

/// Minimise a smooth convex objective over the probability simplex by entropic
/// mirror descent (exponentiated gradient) with Armijo backtracking.
///
/// Iterates stay strictly positive when started from a positive point, so
/// objectives whose gradient diverges on the boundary are safe. Exhausting
/// max_iters yields an unconverged report rather than an exception; a
/// non-finite objective at the starting iterate raises NumericFailure.
template <typename Scalar>
SimplexSolution<Scalar> minimize_on_simplex(
    const Objective<Scalar>& objective, Index m, const SolverOptions<Scalar>& options = {},
    const std::optional<BasicSimplexWeights<Scalar>>& init = std::nullopt) {
  Vector<Scalar> alpha =
      init ? init->weights() : BasicSimplexWeights<Scalar>::uniform(m).weights();
  if (alpha.size() != m) throw DimensionMismatch("initial weights have the wrong length");
  auto propose = [](const Vector<Scalar>& a, const Vector<Scalar>& g, Scalar step) {
    const Scalar shift = g.minCoeff();
    Vector<Scalar> next = a.cwiseProduct((-step * (g.array() - shift)).exp().matrix());
    // Once a weight underflows to zero a multiplicative update can never revive it.
    next = next.cwiseMax(std::numeric_limits<Scalar>::min());
    return Vector<Scalar>(next / next.sum());
  };
  auto report = detail::descend(objective, alpha, options, propose,
                                [](const Vector<Scalar>& a, const Vector<Scalar>& g) {
                                  return simplex_stationarity(a, g);
                                },
                                detail::simplex_slope<Scalar>, detail::no_snap<Scalar>);
  alpha /= alpha.sum();
  return {BasicSimplexWeights<Scalar>(std::move(alpha)), std::move(report)};
}

/// Projected gradient descent over the simplex; an independent route used to
/// cross-check minimize_on_simplex on objectives that are finite on the boundary.
template <typename Scalar>
SimplexSolution<Scalar> minimize_on_simplex_projected(
    const Objective<Scalar>& objective, Index m, const SolverOptions<Scalar>& options = {},
    const std::optional<BasicSimplexWeights<Scalar>>& init = std::nullopt) {
  Vector<Scalar> alpha =
      init ? init->weights() : BasicSimplexWeights<Scalar>::uniform(m).weights();
  if (alpha.size() != m) throw DimensionMismatch("initial weights have the wrong length");
  auto propose = [](const Vector<Scalar>& a, const Vector<Scalar>& g, Scalar step) {
    const Vector<Scalar> moved = a - step * g;
    return Vector<Scalar>(project_to_simplex(moved).weights());
  };
  auto report = detail::descend(objective, alpha, options, propose,
                                [](const Vector<Scalar>& a, const Vector<Scalar>& g) {
                                  return simplex_stationarity(a, g);
                                },
                                detail::simplex_slope<Scalar>, detail::no_snap<Scalar>);
  return {BasicSimplexWeights<Scalar>(std::move(alpha)), std::move(report)};
}

/// Minimise over the nonnegative orthant with unnormalised multiplicative
/// updates alpha_i <- alpha_i exp(-step grad_i). Default start: 1/m everywhere.
template <typename Scalar>
NonnegSolution<Scalar> minimize_on_nonneg(const Objective<Scalar>& objective, Index m,
                                          const SolverOptions<Scalar>& options = {},
                                          const std::optional<Vector<Scalar>>& init = std::nullopt) {
  Vector<Scalar> alpha = init ? *init : Vector<Scalar>::Constant(m, Scalar(1) / Scalar(m));
  if (alpha.size() != m) throw DimensionMismatch("initial weights have the wrong length");
  if ((alpha.array() < Scalar(0)).any()) throw DomainError("initial weights must be nonnegative");
  auto propose = [](const Vector<Scalar>& a, const Vector<Scalar>& g, Scalar step) {
    const auto exponent = (-step * g.array()).min(Scalar(50));
    return Vector<Scalar>(a.cwiseProduct(exponent.exp().matrix()));
  };
  auto report = detail::descend(objective, alpha, options, propose,
                                [](const Vector<Scalar>& a, const Vector<Scalar>& g) {
                                  return nonneg_stationarity(a, g);
                                },
                                detail::plain_slope<Scalar>, detail::snap_nonneg<Scalar>);
  return {std::move(alpha), std::move(report)};
}

/// Continues a simplex solution with Newton steps until the KKT residual meets
/// options.tol or max_steps is spent. Iterations add to the report.
template <typename Scalar>
SimplexSolution<Scalar> newton_refine_on_simplex(const Objective<Scalar>& objective,
                                                 const Hessian<Scalar>& hessian,
                                                 SimplexSolution<Scalar> start,
                                                 const SolverOptions<Scalar>& options = {},
                                                 int max_steps = 100) {
  Vector<Scalar> alpha = start.weights.weights();
  detail::newton_refine(objective, hessian, alpha, start.report, options, true, max_steps,
                        [](const Vector<Scalar>& a, const Vector<Scalar>& g) {
                          return simplex_stationarity(a, g);
                        });
  alpha /= alpha.sum();
  return {BasicSimplexWeights<Scalar>(std::move(alpha)), std::move(start.report)};
}

/// Orthant counterpart of newton_refine_on_simplex.
template <typename Scalar>
NonnegSolution<Scalar> newton_refine_on_nonneg(const Objective<Scalar>& objective,
                                               const Hessian<Scalar>& hessian,
                                               NonnegSolution<Scalar> start,
                                               const SolverOptions<Scalar>& options = {},
                                               int max_steps = 100) {
  detail::newton_refine(objective, hessian, start.weights, start.report, options, false, max_steps,
                        [](const Vector<Scalar>& a, const Vector<Scalar>& g) {
                          return nonneg_stationarity(a, g);
                        });
  return start;
}

}  // namespace fdivergence
