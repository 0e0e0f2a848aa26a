#include "fdiv/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>
#include <string>

#include "fdiv/errors.hpp"

namespace fdivergence {
namespace {

void require_positive(double x, const char* who) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(who) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// B_{2k} / (2k (2k - 1)), k = 1..8
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,        -1.0 / 360.0,          1.0 / 1260.0,     -1.0 / 1680.0,
    1.0 / 1188.0,      -691.0 / 360360.0,     1.0 / 156.0,      -3617.0 / 122400.0,
};

// B_{2k} / (2k), k = 1..8
constexpr std::array<double, 8> kDigammaSeries = {
    1.0 / 12.0,   -1.0 / 120.0,       1.0 / 252.0,  -1.0 / 240.0,
    1.0 / 132.0,  -691.0 / 32760.0,   1.0 / 12.0,   -3617.0 / 8160.0,
};

double stirling_log_gamma(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv;
  for (double c : kStirling) {
    series += c * power;
    power *= inv2;
  }
  constexpr double half_log_two_pi = 0.91893853320467274178;
  return (x - 0.5) * std::log(x) - x + half_log_two_pi + series;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  constexpr double kShiftTo = 12.0;
  if (x >= kShiftTo) return stirling_log_gamma(x);
  // ln Gamma(x) = ln Gamma(x + k) - ln(x (x+1) ... (x+k-1))
  double product = 1.0;
  double z = x;
  while (z < kShiftTo) {
    product *= z;
    z += 1.0;
  }
  return stirling_log_gamma(z) - std::log(product);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  double z = x;
  while (z < 6.0) {
    shift += 1.0 / z;
    z += 1.0;
  }
  const double inv2 = 1.0 / (z * z);
  double series = 0.0;
  double power = inv2;
  for (double c : kDigammaSeries) {
    series += c * power;
    power *= inv2;
  }
  return std::log(z) - 0.5 / z - series - shift;
}

double log_beta(double a, double b) {
  require_positive(a, "log_beta");
  require_positive(b, "log_beta");
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

namespace {

// Kronrod 15-point nodes/weights with embedded Gauss 7-point weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& g, double lo, double hi,
                      long& evaluations) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = g(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = g(center - dx) + g(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  evaluations += 15;
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) {
    throw NumericFailure("integrate_adaptive: integrand is not finite on [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  }
  return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& g, double lo, double hi,
                                    double tol) {
  return integrate_adaptive(g, lo, hi, QuadratureOptions{tol, 4000});
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& g, double lo, double hi,
                                    const QuadratureOptions& options) {
  if (!(lo < hi)) throw DomainError("integrate_adaptive: require lo < hi");
  if (!(options.tol > 0.0)) throw DomainError("integrate_adaptive: tol must be positive");

  QuadratureResult result;
  std::vector<Segment> heap;
  heap.push_back(gauss_kronrod(g, lo, hi, result.evaluations));
  double value = heap.front().value;
  double error = heap.front().error;

  auto done = [&] {
    return error <= std::max(options.tol, 50.0 * std::numeric_limits<double>::epsilon() *
                                              std::abs(value));
  };
  while (!done()) {
    if (static_cast<int>(heap.size()) >= options.max_subintervals) {
      throw AccuracyNotReached("integrate_adaptive: subinterval budget exhausted", value, error);
    }
    std::pop_heap(heap.begin(), heap.end());
    const Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(worst.lo < mid && mid < worst.hi)) {
      throw AccuracyNotReached("integrate_adaptive: interval cannot be bisected further", value,
                               error);
    }
    heap.push_back(gauss_kronrod(g, worst.lo, mid, result.evaluations));
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(gauss_kronrod(g, mid, worst.hi, result.evaluations));
    std::push_heap(heap.begin(), heap.end());
    // full re-sum; incremental updates drift
    value = 0.0;
    error = 0.0;
    for (const Segment& s : heap) {
      value += s.value;
      error += s.error;
    }
  }
  result.value = value;
  result.abs_error_estimate = error;
  return result;
}

}  // namespace fdivergence
