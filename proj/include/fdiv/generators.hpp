#pragma once

#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace fdivergence {

/// Closed real interval with possibly infinite or open ends.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = true;
  bool hi_open = true;

  bool contains(double u) const {
    const bool above = lo_open ? u > lo : u >= lo;
    const bool below = hi_open ? u < hi : u <= hi;
    return above && below;
  }
};

/// A convex f on [0, inf) with f(1) = 0, together with its calculus.
///
/// f returns +inf outside [0, inf) (and at t = 0 where the lower
/// semicontinuous extension is infinite). fstar returns +inf outside
/// dual_domain. fprime_inverse is empty when f' is not invertible (total
/// variation); otherwise it accepts any u and returns a value below 0 when u is
/// under the range of f' on (0, inf) so callers can clip at zero.
struct DivergenceGenerator {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> fprime;
  /// f'' on (0, inf); 0 for total variation away from the kink.
  std::function<double(double)> fsecond;
  std::function<double(double)> fstar;
  std::function<double(double)> fprime_inverse;
  Interval dual_domain;
  /// lim_{t -> 0+} f'(t).
  double fprime_limit_at_zero = 0.0;
  /// sup_{t > 0} f'(t); fprime_inverse(u) is finite only for u below this.
  double fprime_supremum = std::numeric_limits<double>::infinity();

  bool has_invertible_derivative() const { return static_cast<bool>(fprime_inverse); }
};

/// Stable identifiers: kl, reverse_kl, total_variation, squared_hellinger, pearson_chi2.
DivergenceGenerator make_generator(std::string_view name);

const std::vector<std::string>& generator_names();

struct BetaParams {
  double alpha;
  double beta;

  BetaParams(double alpha, double beta);
};

/// Closed-form KL(B(a1,b1) || B(a2,b2)).
double kl_beta_closed_form(const BetaParams& p, const BetaParams& q);

}  // namespace fdivergence
