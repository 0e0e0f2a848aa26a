#include "fdiv/generators.hpp"

#include <cmath>

#include "fdiv/errors.hpp"
#include "fdiv/numerics.hpp"

namespace fdivergence {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DivergenceGenerator kullback_leibler() {
  DivergenceGenerator g;
  g.name = "kl";
  g.f = [](double t) {
    if (t < 0.0) return kInf;
    return t == 0.0 ? 0.0 : t * std::log(t);
  };
  g.fprime = [](double t) { return std::log(t) + 1.0; };
  g.fsecond = [](double t) { return 1.0 / t; };
  g.fstar = [](double u) { return std::exp(u - 1.0); };
  g.fprime_inverse = [](double u) { return std::exp(u - 1.0); };
  g.dual_domain = {};
  g.fprime_limit_at_zero = -kInf;
  return g;
}

DivergenceGenerator reverse_kullback_leibler() {
  DivergenceGenerator g;
  g.name = "reverse_kl";
  g.f = [](double t) { return t <= 0.0 ? kInf : -std::log(t); };
  g.fprime = [](double t) { return -1.0 / t; };
  g.fsecond = [](double t) { return 1.0 / (t * t); };
  g.fstar = [](double u) { return u < 0.0 ? -1.0 - std::log(-u) : kInf; };
  g.fprime_inverse = [](double u) { return u < 0.0 ? -1.0 / u : kInf; };
  g.dual_domain = {-kInf, 0.0, true, true};
  g.fprime_limit_at_zero = -kInf;
  g.fprime_supremum = 0.0;
  return g;
}

DivergenceGenerator total_variation() {
  DivergenceGenerator g;
  g.name = "total_variation";
  g.f = [](double t) { return t < 0.0 ? kInf : std::abs(t - 1.0); };
  // A subgradient; 0 at the kink.
  g.fprime = [](double t) { return t > 1.0 ? 1.0 : (t < 1.0 ? -1.0 : 0.0); };
  g.fsecond = [](double) { return 0.0; };
  g.fstar = [](double u) { return (u >= -1.0 && u <= 1.0) ? u : kInf; };
  g.dual_domain = {-1.0, 1.0, false, false};
  g.fprime_limit_at_zero = -1.0;
  g.fprime_supremum = 1.0;
  return g;
}

DivergenceGenerator squared_hellinger() {
  DivergenceGenerator g;
  g.name = "squared_hellinger";
  g.f = [](double t) {
    if (t < 0.0) return kInf;
    const double r = std::sqrt(t) - 1.0;
    return r * r;
  };
  g.fprime = [](double t) { return 1.0 - 1.0 / std::sqrt(t); };
  g.fsecond = [](double t) { return 0.5 / (t * std::sqrt(t)); };
  g.fstar = [](double u) { return u < 1.0 ? u / (1.0 - u) : kInf; };
  g.fprime_inverse = [](double u) {
    if (u >= 1.0) return kInf;
    const double s = 1.0 / (1.0 - u);
    return s * s;
  };
  g.dual_domain = {-kInf, 1.0, true, true};
  g.fprime_limit_at_zero = -kInf;
  g.fprime_supremum = 1.0;
  return g;
}

DivergenceGenerator pearson_chi2() {
  DivergenceGenerator g;
  g.name = "pearson_chi2";
  g.f = [](double t) { return t < 0.0 ? kInf : (t - 1.0) * (t - 1.0); };
  g.fprime = [](double t) { return 2.0 * (t - 1.0); };
  g.fsecond = [](double) { return 2.0; };
  // sup over t >= 0; the maximiser hits t = 0 below u = -2
  g.fstar = [](double u) { return u >= -2.0 ? u + 0.25 * u * u : -1.0; };
  g.fprime_inverse = [](double u) { return 1.0 + 0.5 * u; };
  g.dual_domain = {};
  g.fprime_limit_at_zero = -2.0;
  return g;
}

}  // namespace

const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names = {"kl", "reverse_kl", "total_variation",
                                                 "squared_hellinger", "pearson_chi2"};
  return names;
}

DivergenceGenerator make_generator(std::string_view name) {
  if (name == "kl") return kullback_leibler();
  if (name == "reverse_kl") return reverse_kullback_leibler();
  if (name == "total_variation") return total_variation();
  if (name == "squared_hellinger") return squared_hellinger();
  if (name == "pearson_chi2") return pearson_chi2();
  throw UnsupportedGenerator("unsupported generator '" + std::string(name) + "'");
}

BetaParams::BetaParams(double alpha, double beta) : alpha(alpha), beta(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw DomainError("beta parameters must be positive and finite");
  }
}

double kl_beta_closed_form(const BetaParams& p, const BetaParams& q) {
  const double d_alpha = q.alpha - p.alpha;
  const double d_beta = q.beta - p.beta;
  return log_beta(q.alpha, q.beta) - log_beta(p.alpha, p.beta) - d_alpha * digamma(p.alpha) -
         d_beta * digamma(p.beta) + (d_alpha + d_beta) * digamma(p.alpha + p.beta);
}

}  // namespace fdivergence
