#include "fdiv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

namespace fdivergence {
namespace {

constexpr double kWeightFloor = 1e-300;

EstimateResult finish(EstimatorKind kind, const GramBlocks& blocks,
                      const DivergenceGenerator& generator, VectorXd alpha,
                      SolverReport<double> report, double lambda, double weight) {
  EstimateResult result;
  result.kind = kind;
  result.divergence_estimate = divergence_term(generator, alpha);
  result.mmd_term = weighted_mmd_squared(blocks, alpha);
  result.objective_value = kind == EstimatorKind::norm_ball
                               ? result.divergence_estimate
                               : result.divergence_estimate + weight * result.mmd_term;
  result.density_ratio_at_y = double(blocks.m) * alpha;
  result.alpha = std::move(alpha);
  result.report = std::move(report);
  result.lambda = lambda;
  result.penalty_weight = weight;
  result.blocks = blocks;
  return result;
}

void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw PreconditionError("regularisation lambda must be positive and finite");
  }
}

// Total variation makes the penalised program piecewise quadratic: with
// c = 1/m the f-term is sum_i |alpha_i - c|. Primal active-set method: each
// weight sits at 0, at the kink c, or inside one of the linear pieces; Newton
// solves the quadratic on the free pieces with a ratio test, and fixed weights
// whose one-sided derivative is negative are released by an exact line step.
enum class Piece { zero, low, kink, high };

struct PiecewiseSolution {
  VectorXd alpha;
  SolverReport<double> report;
};

PiecewiseSolution solve_total_variation(const GramBlocks& blocks, double weight, bool simplex,
                                        const SolverOptions<double>& options) {
  const Index m = blocks.m;
  const double c = 1.0 / double(m);
  VectorXd alpha = VectorXd::Constant(m, c);
  std::vector<Piece> piece(std::size_t(m), Piece::kink);
  const MatrixXd& k = blocks.kyy;
  auto mmd_gradient = [&] { return VectorXd(2.0 * weight * (k * alpha - blocks.kxy_column_means)); };
  auto slope = [](Piece p) { return p == Piece::high ? 1.0 : -1.0; };
  auto reclassify = [&](Index i) {
    auto& p = piece[std::size_t(i)];
    if (p == Piece::low && alpha[i] <= 0.0) alpha[i] = 0.0, p = Piece::zero;
    else if (p == Piece::low && alpha[i] >= c) alpha[i] = c, p = Piece::kink;
    else if (p == Piece::high && alpha[i] <= c) alpha[i] = c, p = Piece::kink;
  };
  // Largest step along d keeping coordinate i inside its piece.
  auto room = [&](Index i, double d) {
    const Piece p = piece[std::size_t(i)];
    if (d < 0.0) {
      if (p == Piece::low) return alpha[i] / -d;
      if (p == Piece::high) return (alpha[i] - c) / -d;
    } else if (d > 0.0 && p == Piece::low) {
      return (c - alpha[i]) / d;
    }
    return std::numeric_limits<double>::infinity();
  };

  SolverReport<double> report;
  report.kkt_residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < options.max_iters) {
    ++it;
    VectorXd mg = mmd_gradient();
    std::vector<Index> free;
    for (Index i = 0; i < m; ++i) {
      const Piece p = piece[std::size_t(i)];
      if (p == Piece::low || p == Piece::high) free.push_back(i);
    }
    const Index f = Index(free.size());

    bool face_stationary = true;
    if (f > 0) {
      MatrixXd h(f, f);
      VectorXd g(f);
      for (Index a = 0; a < f; ++a) {
        g[a] = slope(piece[std::size_t(free[a])]) + mg[free[a]];
        for (Index b = 0; b < f; ++b) h(a, b) = 2.0 * weight * k(free[a], free[b]);
      }
      h.diagonal().array() += 1e-12 * (1.0 + h.diagonal().maxCoeff());
      const Eigen::LDLT<MatrixXd> ldlt(h);
      VectorXd d = -ldlt.solve(g);
      if (simplex) {
        const VectorXd ones_solved = ldlt.solve(VectorXd::Ones(f));
        d -= (d.sum() / ones_solved.sum()) * ones_solved;
      }
      double t = 1.0;
      Index blocking = -1;
      for (Index a = 0; a < f; ++a) {
        const double r = room(free[a], d[a]);
        if (r < t) t = r, blocking = a;
      }
      for (Index a = 0; a < f; ++a) alpha[free[a]] += t * d[a];
      if (blocking >= 0) {
        const Index i = free[blocking];
        alpha[i] = piece[std::size_t(i)] == Piece::low && d[blocking] < 0.0 ? 0.0 : c;
        face_stationary = false;
      }
      for (Index i : free) reclassify(i);
      if (face_stationary) mg = mmd_gradient();
    }
    if (!face_stationary) continue;

    // Multiplier of the sum constraint and one-sided derivatives of fixed weights.
    double mu = 0.0;
    if (simplex && f > 0) {
      for (Index i : free) mu += slope(piece[std::size_t(i)]) + mg[i];
      mu /= double(f);
    }
    double residual = 0.0;
    for (Index i : free) residual = std::max(residual, std::abs(slope(piece[std::size_t(i)]) + mg[i] - mu));
    if (simplex && f == 0) {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        if (piece[std::size_t(i)] == Piece::kink) {
          lo = std::max(lo, mg[i] - 1.0);
          hi = std::min(hi, mg[i] + 1.0);
        } else {
          hi = std::min(hi, mg[i] - 1.0);
        }
      }
      mu = lo <= hi ? 0.5 * (lo + hi) : hi;
    }
    // direction +1 raises weight i, -1 lowers it
    Index worst = -1;
    int direction = 0;
    double worst_derivative = 0.0;
    for (Index i = 0; i < m; ++i) {
      const Piece p = piece[std::size_t(i)];
      if (p == Piece::low || p == Piece::high) continue;
      const double up = (p == Piece::zero ? -1.0 : 1.0) + mg[i] - mu;
      if (up < worst_derivative) worst_derivative = up, worst = i, direction = 1;
      if (p == Piece::kink) {
        const double down = 1.0 - mg[i] + mu;
        if (down < worst_derivative) worst_derivative = down, worst = i, direction = -1;
      }
    }
    residual = std::max(residual, -worst_derivative);
    const double previous = report.kkt_residual;
    report.kkt_residual = residual;
    if (residual <= options.tol) break;
    if (worst < 0) {
      // only the free weights are off; polish them unless that already failed
      if (it > 1 && !(residual < 0.5 * previous)) break;
      continue;
    }

    // Exact step along direction * (e_worst - e_partner) on the simplex, or
    // along direction * e_worst on the orthant.
    Index partner = -1;
    if (simplex) {
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        if (i == worst) continue;
        const Piece p = piece[std::size_t(i)];
        double derivative;
        if (p == Piece::low || p == Piece::high) {
          derivative = -direction * (slope(p) + mg[i] - mu);
        } else if (direction > 0) {
          if (p == Piece::zero) continue;
          derivative = 1.0 - mg[i] + mu;
        } else {
          derivative = (p == Piece::zero ? -1.0 : 1.0) + mg[i] - mu;
        }
        if (derivative < best) best = derivative, partner = i;
      }
      if (partner < 0) break;
    }
    VectorXd step = VectorXd::Zero(m);
    step[worst] = direction;
    if (partner >= 0) step[partner] = -direction;
    auto enter = [&](Index i, double sign) {
      Piece& p = piece[std::size_t(i)];
      if (p == Piece::zero) p = Piece::low;
      else if (p == Piece::kink) p = sign > 0 ? Piece::high : Piece::low;
    };
    enter(worst, direction);
    if (partner >= 0) enter(partner, -direction);
    double linear = 0.0;
    for (Index i : {worst, partner}) {
      if (i >= 0) linear += step[i] * (slope(piece[std::size_t(i)]) + mg[i]);
    }
    const double curvature = 2.0 * weight * step.dot(k * step);
    double t = curvature > 0.0 ? -linear / curvature : std::numeric_limits<double>::infinity();
    for (Index i : {worst, partner}) {
      if (i >= 0) t = std::min(t, room(i, step[i]));
    }
    if (!(t > 0.0) || !std::isfinite(t)) break;
    alpha += t * step;
    for (Index i : {worst, partner}) {
      if (i >= 0) reclassify(i);
    }
  }
  if (simplex) alpha /= alpha.sum();
  report.iterations = it;
  report.converged = report.kkt_residual <= options.tol;
  return {alpha, report};
}

constexpr int kNewtonSteps = 200;

// Newton steps from the start point; if they stall (nonsmooth generators, or
// penalties so heavy the Hessian is numerically singular) mirror descent takes
// over with the remaining budget and Newton gets one more try from its result.
SimplexSolution<double> solve_on_simplex(const GramBlocks& blocks,
                                         const DivergenceGenerator& generator, double weight,
                                         const SolverOptions<double>& options,
                                         const std::optional<SimplexWeights>& start = std::nullopt) {
  const auto objective = penalized_objective(blocks, generator, weight);
  if (generator.name == "total_variation") {
    auto exact = solve_total_variation(blocks, weight, true, options);
    VectorXd g(blocks.m);
    exact.report.final_objective = objective(exact.alpha, g);
    return {SimplexWeights(std::move(exact.alpha)), std::move(exact.report)};
  }
  const SimplexWeights init = start ? *start : SimplexWeights::uniform(blocks.m);
  if (!generator.fsecond) return minimize_on_simplex<double>(objective, blocks.m, options, init);
  const auto hessian = penalized_hessian(blocks, generator, weight);
  auto newton = newton_refine_on_simplex<double>(objective, hessian, {init, {}}, options, kNewtonSteps);
  if (newton.report.converged) return newton;

  auto first_order = options;
  first_order.max_iters = std::max(0, options.max_iters - newton.report.iterations);
  auto descent = minimize_on_simplex<double>(objective, blocks.m, first_order, newton.weights);
  descent.report.iterations += newton.report.iterations;
  if (descent.report.converged) return descent;
  return newton_refine_on_simplex<double>(objective, hessian, std::move(descent), options,
                                          kNewtonSteps);
}

NonnegSolution<double> solve_on_nonneg(const GramBlocks& blocks,
                                       const DivergenceGenerator& generator, double weight,
                                       const SolverOptions<double>& options) {
  const auto objective = penalized_objective(blocks, generator, weight);
  if (generator.name == "total_variation") {
    auto exact = solve_total_variation(blocks, weight, false, options);
    VectorXd g(blocks.m);
    exact.report.final_objective = objective(exact.alpha, g);
    return {std::move(exact.alpha), std::move(exact.report)};
  }
  const VectorXd init = VectorXd::Constant(blocks.m, 1.0 / double(blocks.m));
  if (!generator.fsecond) return minimize_on_nonneg<double>(objective, blocks.m, options, init);
  const auto hessian = penalized_hessian(blocks, generator, weight);
  auto newton = newton_refine_on_nonneg<double>(objective, hessian, {init, {}}, options, kNewtonSteps);
  if (newton.report.converged) return newton;

  auto first_order = options;
  first_order.max_iters = std::max(0, options.max_iters - newton.report.iterations);
  auto descent = minimize_on_nonneg<double>(objective, blocks.m, first_order, newton.weights);
  descent.report.iterations += newton.report.iterations;
  if (descent.report.converged) return descent;
  return newton_refine_on_nonneg<double>(objective, hessian, std::move(descent), options,
                                         kNewtonSteps);
}

}  // namespace

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "restricted") return EstimatorKind::restricted;
  if (name == "norm_ball") return EstimatorKind::norm_ball;
  if (name == "nwj") return EstimatorKind::nwj;
  throw PreconditionError("unknown estimator '" + std::string(name) + "'");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::restricted: return "restricted";
    case EstimatorKind::norm_ball: return "norm_ball";
    case EstimatorKind::nwj: return "nwj";
  }
  return "unknown";
}

double EstimatorConfig::resolve_lambda(Index n) const {
  const double value = lambda ? *lambda : lambda_c / double(n);
  require_positive_lambda(value);
  return value;
}

SolverOptions<double> EstimatorConfig::solver_options() const {
  if (!(solver_tol > 0.0)) throw PreconditionError("solver tolerance must be positive");
  SolverOptions<double> options;
  options.tol = solver_tol;
  options.max_iters = solver_max_iters;
  options.record_trace = false;
  return options;
}

double divergence_term(const DivergenceGenerator& generator, const VectorXd& alpha) {
  const double m = double(alpha.size());
  double sum = 0.0;
  for (Index i = 0; i < alpha.size(); ++i) sum += generator.f(m * std::max(alpha[i], kWeightFloor));
  return sum / m;
}

Objective<double> penalized_objective(const GramBlocks& blocks,
                                      const DivergenceGenerator& generator, double weight) {
  return [&blocks, &generator, weight](const VectorXd& alpha, VectorXd& gradient) {
    const double m = double(blocks.m);
    const VectorXd kyy_alpha = blocks.kyy * alpha;
    double f_sum = 0.0;
    gradient.resize(alpha.size());
    for (Index i = 0; i < alpha.size(); ++i) {
      const double t = m * std::max(alpha[i], kWeightFloor);
      f_sum += generator.f(t);
      gradient[i] = generator.fprime(t);
    }
    const double mmd = blocks.kxx_mean - 2.0 * blocks.kxy_column_means.dot(alpha) +
                       alpha.dot(kyy_alpha);
    gradient += 2.0 * weight * (kyy_alpha - blocks.kxy_column_means);
    return f_sum / m + weight * mmd;
  };
}

Hessian<double> penalized_hessian(const GramBlocks& blocks, const DivergenceGenerator& generator,
                                  double weight) {
  return [&blocks, &generator, weight](const VectorXd& alpha) {
    const double m = double(blocks.m);
    MatrixXd h = 2.0 * weight * blocks.kyy;
    for (Index i = 0; i < alpha.size(); ++i) {
      h(i, i) += m * generator.fsecond(m * std::max(alpha[i], kWeightFloor));
    }
    return h;
  };
}

GramBlocks prepare_blocks(const SampleMatrix& x, const SampleMatrix& y,
                          const EstimatorConfig& config, double* bandwidth_out) {
  if (x.cols() != y.cols()) {
    throw PreconditionError("samples have different dimensions (" + std::to_string(x.cols()) +
                            " vs " + std::to_string(y.cols()) + ")");
  }
  if (x.rows() != y.rows()) {
    throw PreconditionError("samples must have equal sizes (" + std::to_string(x.rows()) +
                            " vs " + std::to_string(y.rows()) + ")");
  }
  if (x.rows() < 2) throw PreconditionError("need at least two points per sample");
  if (x.cols() < 1) throw PreconditionError("samples must have at least one column");
  if (!x.allFinite() || !y.allFinite()) throw PreconditionError("samples contain non-finite values");
  const KernelSpec spec =
      config.kernel ? *config.kernel : KernelSpec(pooled_variance_bandwidth(x, y, config.bandwidth_rule));
  if (bandwidth_out) *bandwidth_out = spec.bandwidth;
  return gram_blocks(x, y, spec);
}

EstimateResult estimate_restricted(const GramBlocks& blocks, const EstimatorConfig& config,
                                   double lambda) {
  require_positive_lambda(lambda);
  const double weight = 0.5 / lambda;
  auto solution = solve_on_simplex(blocks, config.generator, weight, config.solver_options());
  return finish(EstimatorKind::restricted, blocks, config.generator, solution.weights.weights(),
                std::move(solution.report), lambda, weight);
}

EstimateResult estimate_nwj(const GramBlocks& blocks, const EstimatorConfig& config,
                            double lambda) {
  require_positive_lambda(lambda);
  const double weight = 0.5 / lambda;
  auto solution = solve_on_nonneg(blocks, config.generator, weight, config.solver_options());
  return finish(EstimatorKind::nwj, blocks, config.generator, std::move(solution.weights),
                std::move(solution.report), lambda, weight);
}

EstimateResult estimate_norm_ball(const GramBlocks& blocks, const EstimatorConfig& config,
                                  double lambda) {
  require_positive_lambda(lambda);
  const auto options = config.solver_options();
  const SimplexWeights uniform = SimplexWeights::uniform(blocks.m);
  if (weighted_mmd_squared(blocks, uniform.weights()) <= lambda) {
    SolverReport<double> report;
    report.converged = true;
    report.kkt_residual = 0.0;
    return finish(EstimatorKind::norm_ball, blocks, config.generator, uniform.weights(),
                  std::move(report), lambda, 0.0);
  }

  int iterations = 0;
  auto solve = [&](double weight, const SimplexWeights& start) {
    auto solution = solve_on_simplex(blocks, config.generator, weight, options, start);
    iterations += solution.report.iterations;
    return solution;
  };
  auto feasible = [&](const SimplexSolution<double>& s) {
    return weighted_mmd_squared(blocks, s.weights.weights()) <= lambda;
  };

  // Bracket the multiplier by factors of ten from 1 within [1e-8, 1e8].
  constexpr double kMinWeight = 1e-8;
  constexpr double kMaxWeight = 1e8;
  double hi = 1.0;
  auto upper = solve(hi, uniform);
  while (!feasible(upper) && hi < kMaxWeight) {
    hi *= 10.0;
    upper = solve(hi, uniform);
  }
  if (!feasible(upper)) {
    const Objective<double> mmd_only = [&blocks](const VectorXd& alpha, VectorXd& gradient) {
      gradient = weighted_mmd_squared_gradient(blocks, alpha);
      return weighted_mmd_squared(blocks, alpha);
    };
    const auto closest = minimize_on_simplex<double>(mmd_only, blocks.m, options, upper.weights);
    const double min_mmd = std::sqrt(std::max(0.0, closest.report.final_objective));
    throw InfeasibleConstraint("norm-ball constraint MMD <= " + std::to_string(std::sqrt(lambda)) +
                                   " is infeasible; smallest MMD reached over the simplex is " +
                                   std::to_string(min_mmd),
                               min_mmd);
  }
  double lo = hi / 10.0;
  auto lower = solve(lo, uniform);
  while (feasible(lower) && lo > kMinWeight) {
    hi = lo;
    upper = lower;
    lo /= 10.0;
    lower = solve(lo, uniform);
  }
  if (feasible(lower)) {
    lower.report.iterations = iterations;
    return finish(EstimatorKind::norm_ball, blocks, config.generator, lower.weights.weights(),
                  std::move(lower.report), lambda, lo);
  }

  // Bisection in log scale; the smallest feasible multiplier gives the smallest f-term.
  double log_lo = std::log(lo);
  double log_hi = std::log(hi);
  for (int step = 0; step < 40; ++step) {
    const double log_mid = 0.5 * (log_lo + log_hi);
    auto mid = solve(std::exp(log_mid), uniform);
    if (feasible(mid)) {
      log_hi = log_mid;
      upper = std::move(mid);
    } else {
      log_lo = log_mid;
    }
  }
  upper.report.iterations = iterations;
  return finish(EstimatorKind::norm_ball, blocks, config.generator, upper.weights.weights(),
                std::move(upper.report), lambda, std::exp(log_hi));
}

namespace {

template <typename Fn>
EstimateResult from_samples(const SampleMatrix& x, const SampleMatrix& y,
                            const EstimatorConfig& config, Fn fn) {
  double bandwidth = 0.0;
  const GramBlocks blocks = prepare_blocks(x, y, config, &bandwidth);
  EstimateResult result = fn(blocks, config, config.resolve_lambda(x.rows()));
  result.bandwidth = bandwidth;
  return result;
}

}  // namespace

EstimateResult estimate_restricted(const SampleMatrix& x, const SampleMatrix& y,
                                   const EstimatorConfig& config) {
  return from_samples(x, y, config, [](const GramBlocks& b, const EstimatorConfig& c, double l) {
    return estimate_restricted(b, c, l);
  });
}

EstimateResult estimate_norm_ball(const SampleMatrix& x, const SampleMatrix& y,
                                  const EstimatorConfig& config) {
  return from_samples(x, y, config, [](const GramBlocks& b, const EstimatorConfig& c, double l) {
    return estimate_norm_ball(b, c, l);
  });
}

EstimateResult estimate_nwj(const SampleMatrix& x, const SampleMatrix& y,
                            const EstimatorConfig& config) {
  return from_samples(x, y, config, [](const GramBlocks& b, const EstimatorConfig& c, double l) {
    return estimate_nwj(b, c, l);
  });
}

EstimateResult estimate(EstimatorKind kind, const SampleMatrix& x, const SampleMatrix& y,
                        const EstimatorConfig& config) {
  switch (kind) {
    case EstimatorKind::restricted: return estimate_restricted(x, y, config);
    case EstimatorKind::norm_ball: return estimate_norm_ball(x, y, config);
    case EstimatorKind::nwj: return estimate_nwj(x, y, config);
  }
  throw PreconditionError("unknown estimator kind");
}

}  // namespace fdivergence
