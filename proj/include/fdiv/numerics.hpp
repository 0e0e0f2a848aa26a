#pragma once

#include <functional>

namespace fdivergence {

/// ln Gamma(x) for x > 0. Stirling series above x = 12, upward recurrence below.
double log_gamma(double x);

/// Digamma psi(x) for x > 0. Lifted to x >= 6 by recurrence, then asymptotic series.
double digamma(double x);

/// ln B(a, b).
double log_beta(double a, double b);

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  long evaluations = 0;
};

struct QuadratureOptions {
  double tol = 1e-10;
  int max_subintervals = 4000;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration on [lo, hi].
///
/// The rule never evaluates the endpoints, so integrable endpoint singularities
/// are tolerated (convergence is slower there). Subintervals are bisected in
/// order of largest error estimate until the summed estimate drops below
/// max(tol, 50 * eps * |value|). Throws AccuracyNotReached when the
/// subinterval budget runs out.
QuadratureResult integrate_adaptive(const std::function<double(double)>& g, double lo, double hi,
                                    double tol = 1e-10);
QuadratureResult integrate_adaptive(const std::function<double(double)>& g, double lo, double hi,
                                    const QuadratureOptions& options);

}  // namespace fdivergence
