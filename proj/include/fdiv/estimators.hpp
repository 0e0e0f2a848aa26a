#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fdiv/generators.hpp"
#include "fdiv/kernels.hpp"
#include "fdiv/simplex_solver.hpp"
#include "fdiv/types.hpp"

namespace fdivergence {

enum class EstimatorKind { restricted, norm_ball, nwj };

EstimatorKind parse_estimator_kind(std::string_view name);
std::string to_string(EstimatorKind kind);

struct EstimatorConfig {
  DivergenceGenerator generator = make_generator("kl");
  /// Explicit regularisation lambda; when unset lambda_n = lambda_c / n.
  std::optional<double> lambda;
  double lambda_c = 1.0;
  /// Explicit kernel; when unset the bandwidth comes from bandwidth_rule.
  std::optional<KernelSpec> kernel;
  BandwidthRule bandwidth_rule = BandwidthRule::pooled_trace;
  double solver_tol = 1e-8;
  int solver_max_iters = 50000;

  double resolve_lambda(Index n) const;
  SolverOptions<double> solver_options() const;
};

struct EstimateResult {
  EstimatorKind kind = EstimatorKind::restricted;
  /// Simplex weights for restricted/norm_ball; nonnegative weights for nwj.
  VectorXd alpha;
  /// Value of the optimisation program (penalised value, or the f-term for norm_ball).
  double objective_value = 0.0;
  /// (1/n) sum_i f(n alpha_i).
  double divergence_estimate = 0.0;
  /// Squared weighted MMD at alpha.
  double mmd_term = 0.0;
  /// n alpha_i, the density-ratio estimate dP/dQ at each y_i.
  VectorXd density_ratio_at_y;
  SolverReport<double> report;
  double lambda = 0.0;
  double bandwidth = 0.0;
  /// Multiplier on the MMD term in the final solve (1/(2 lambda), or the norm-ball multiplier).
  double penalty_weight = 0.0;
  GramBlocks blocks;

  SimplexWeights simplex_weights() const { return SimplexWeights(alpha); }
};

/// (1/m) sum_i f(m alpha_i), with alpha floored at 1e-300.
double divergence_term(const DivergenceGenerator& generator, const VectorXd& alpha);

/// J(alpha) = (1/m) sum_i f(m alpha_i) + weight * weighted_mmd_squared(blocks, alpha).
Objective<double> penalized_objective(const GramBlocks& blocks,
                                      const DivergenceGenerator& generator, double weight);

/// Penalised program over the simplex, weight 1/(2 lambda). Damped Newton on
/// the positive coordinates, falling back to mirror descent when it stalls.
EstimateResult estimate_restricted(const SampleMatrix& x, const SampleMatrix& y,
                                   const EstimatorConfig& config);
EstimateResult estimate_restricted(const GramBlocks& blocks, const EstimatorConfig& config,
                                   double lambda);

/// min (1/n) sum f(n alpha_i) over the simplex subject to weighted MMD <= sqrt(lambda).
///
/// Solved through the penalised program: the multiplier on the squared MMD is
/// bracketed by powers of ten within [1e-8, 1e8], then bisected 40 times in log
/// scale. Throws InfeasibleConstraint when even the largest multiplier leaves
/// the constraint violated. Iterations are summed over all solves.
EstimateResult estimate_norm_ball(const SampleMatrix& x, const SampleMatrix& y,
                                  const EstimatorConfig& config);
EstimateResult estimate_norm_ball(const GramBlocks& blocks, const EstimatorConfig& config,
                                  double lambda);

/// Same penalised objective as estimate_restricted, minimised over alpha >= 0.
EstimateResult estimate_nwj(const SampleMatrix& x, const SampleMatrix& y,
                            const EstimatorConfig& config);
EstimateResult estimate_nwj(const GramBlocks& blocks, const EstimatorConfig& config,
                            double lambda);

EstimateResult estimate(EstimatorKind kind, const SampleMatrix& x, const SampleMatrix& y,
                        const EstimatorConfig& config);

/// Validates the sample pair and builds the Gram blocks under config's kernel rule.
/// Hessian of penalized_objective: diag(m f''(m alpha_i)) + 2 weight Kyy.
Hessian<double> penalized_hessian(const GramBlocks& blocks, const DivergenceGenerator& generator,
                                  double weight);

GramBlocks prepare_blocks(const SampleMatrix& x, const SampleMatrix& y,
                          const EstimatorConfig& config, double* bandwidth_out = nullptr);

}  // namespace fdivergence
