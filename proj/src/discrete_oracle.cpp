#include "fdiv/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "fdiv/errors.hpp"

namespace fdivergence {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pmf(const VectorXd& v, const char* name) {
  if (v.size() == 0) throw DomainError(std::string(name) + " must be nonempty");
  if (!v.allFinite() || (v.array() < 0.0).any()) {
    throw DomainError(std::string(name) + " must be finite and nonnegative");
  }
  if (std::abs(v.sum() - 1.0) > DiscretePair::kMassTolerance) {
    throw DomainError(std::string(name) + " must sum to 1");
  }
}

void check_support(const DiscretePair& pair, const TestFunction& phi) {
  if (phi.values().size() != pair.support_size()) {
    throw DimensionMismatch("test function length does not match the support size");
  }
}

double expectation_p(const DiscretePair& pair, const TestFunction& phi) {
  return pair.p().dot(phi.values());
}

// Sum_i q_i (phi_i r_i - f(r_i)) at density r.
double conjugate_objective(const DiscretePair& pair, const DivergenceGenerator& gen,
                           const VectorXd& phi, const VectorXd& r) {
  double total = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    if (r[i] == 0.0) {
      total -= pair.q()[i] * gen.f(0.0);
    } else {
      total += pair.q()[i] * (phi[i] * r[i] - gen.f(r[i]));
    }
  }
  return total;
}

std::string describe(const DiscretePair& pair, const TestFunction& phi) {
  std::ostringstream out;
  out.precision(17);
  auto write = [&out](const char* key, const VectorXd& v) {
    out << '"' << key << "\":[";
    for (Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << ']';
  };
  out << '{';
  write("p", pair.p());
  out << ',';
  write("q", pair.q());
  out << ',';
  write("phi", phi.values());
  out << '}';
  return out.str();
}

}  // namespace

DiscretePair::DiscretePair(VectorXd p, VectorXd q) : p_(std::move(p)), q_(std::move(q)) {
  if (p_.size() != q_.size()) throw DimensionMismatch("p and q must share a support");
  check_pmf(p_, "p");
  check_pmf(q_, "q");
  if (q_.minCoeff() < kMinQ) throw DomainError("q must be at least 1e-12 everywhere");
}

TestFunction::TestFunction(VectorXd phi) : phi_(std::move(phi)) {
  if (!phi_.allFinite()) throw DomainError("test function values must be finite");
}

double exact_divergence(const DiscretePair& pair, const DivergenceGenerator& gen) {
  double total = 0.0;
  for (Index i = 0; i < pair.support_size(); ++i) {
    total += pair.q()[i] * gen.f(pair.p()[i] / pair.q()[i]);
  }
  return total;
}

double unrestricted_conjugate_value(const DiscretePair& pair, const DivergenceGenerator& gen,
                                    const TestFunction& phi) {
  check_support(pair, phi);
  double total = 0.0;
  for (Index i = 0; i < pair.support_size(); ++i) {
    const double u = phi.values()[i];
    if (!gen.dual_domain.contains(u)) return kInf;
    total += pair.q()[i] * gen.fstar(u);
  }
  return total;
}

VectorXd restricted_conjugate_density(const DiscretePair& pair, const DivergenceGenerator& gen,
                                      const TestFunction& phi) {
  check_support(pair, phi);
  if (!gen.has_invertible_derivative()) {
    throw DomainError("generator '" + gen.name + "' has no invertible derivative");
  }
  const VectorXd& values = phi.values();
  const VectorXd& q = pair.q();
  const Index m = values.size();
  auto density = [&](double nu) {
    VectorXd r(m);
    for (Index i = 0; i < m; ++i) r[i] = std::max(0.0, gen.fprime_inverse(values[i] - nu));
    return r;
  };
  // mass(nu) = sum q_i r_i(nu) is nonincreasing in nu; find mass = 1.
  auto mass = [&](double nu) { return q.dot(density(nu)); };

  const double top = values.maxCoeff();
  const bool bounded = std::isfinite(gen.fprime_supremum);
  // nu must exceed top - sup f' for every r_i to be finite.
  const double nu_floor = bounded ? top - gen.fprime_supremum : -kInf;
  double nu_hi = bounded ? nu_floor + 1.0 : top;
  for (int k = 0; mass(nu_hi) > 1.0; ++k) {
    if (k > 200) throw NumericFailure("restricted conjugate: cannot bracket the multiplier");
    nu_hi += std::ldexp(1.0, k);
  }
  double nu_lo = bounded ? 0.5 * (nu_floor + nu_hi) : nu_hi - 1.0;
  for (int k = 0; mass(nu_lo) < 1.0; ++k) {
    if (k > 1100) {
      std::ostringstream msg;
      msg << "restricted conjugate: cannot bracket the multiplier (mass at nu=" << nu_lo << " is "
          << mass(nu_lo) << ")";
      throw NumericFailure(msg.str());
    }
    nu_lo = bounded ? nu_floor + 0.5 * (nu_lo - nu_floor) : nu_lo - std::ldexp(1.0, k);
  }
  for (int it = 0; it < 400 && nu_hi - nu_lo > 1e-12 * std::max(1.0, std::abs(nu_hi)); ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    if (mid <= nu_lo || mid >= nu_hi) break;
    (mass(mid) > 1.0 ? nu_lo : nu_hi) = mid;
  }
  VectorXd r = density(0.5 * (nu_lo + nu_hi));
  // Normalise the residual mass error away; the KKT solution has exactly unit mass.
  r /= q.dot(r);
  return r;
}

double total_variation_conjugate_by_enumeration(const DiscretePair& pair, const TestFunction& phi) {
  check_support(pair, phi);
  const Index m = pair.support_size();
  if (m > 20) throw DomainError("vertex enumeration is limited to support size 20");
  const VectorXd& q = pair.q();
  const VectorXd& values = phi.values();
  // Maximiser of a concave piecewise-linear program: every coordinate but one
  // sits at a breakpoint (r_i in {0, 1}); the free one absorbs the mass constraint.
  double best = -kInf;
  const auto total_variation = make_generator("total_variation");
  for (Index free = 0; free < m; ++free) {
    const unsigned long patterns = 1ul << (m - 1);
    for (unsigned long bits = 0; bits < patterns; ++bits) {
      VectorXd r(m);
      double mass = 0.0;
      Index bit = 0;
      for (Index i = 0; i < m; ++i) {
        if (i == free) continue;
        r[i] = (bits >> bit++) & 1ul ? 1.0 : 0.0;
        mass += q[i] * r[i];
      }
      const double remaining = 1.0 - mass;
      if (remaining < -1e-15) continue;
      r[free] = std::max(0.0, remaining) / q[free];
      best = std::max(best, conjugate_objective(pair, total_variation, values, r));
    }
  }
  return best;
}

double total_variation_conjugate_by_transport(const DiscretePair& pair, const TestFunction& phi) {
  check_support(pair, phi);
  const VectorXd& q = pair.q();
  const VectorXd& values = phi.values();
  const Index m = pair.support_size();
  // In mass coordinates w_i = q_i r_i, start at w = q. Moving mass from i to j
  // gains phi_j - phi_i - 2 while w_i <= q_i and w_j >= q_j; above q, mass only
  // ever flows into a single argmax, so the optimum drains low-phi coordinates
  // into the top coordinate while the gain is positive.
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });
  const Index top = order.back();
  VectorXd w = q;
  for (Index k = 0; k + 1 < m; ++k) {
    const Index i = order[k];
    if (values[top] - values[i] > 2.0) {
      w[top] += w[i];
      w[i] = 0.0;
    }
  }
  double total = 0.0;
  for (Index i = 0; i < m; ++i) total += values[i] * w[i] - std::abs(w[i] - q[i]);
  return total;
}

double restricted_conjugate_value(const DiscretePair& pair, const DivergenceGenerator& gen,
                                  const TestFunction& phi) {
  check_support(pair, phi);
  if (!gen.has_invertible_derivative()) {
    if (gen.name != "total_variation") {
      throw DomainError("no restricted-conjugate method for generator '" + gen.name + "'");
    }
    return pair.support_size() <= 12 ? total_variation_conjugate_by_enumeration(pair, phi)
                                     : total_variation_conjugate_by_transport(pair, phi);
  }
  const VectorXd r = restricted_conjugate_density(pair, gen, phi);
  return conjugate_objective(pair, gen, phi.values(), r);
}

ChainReport verify_tightness_chain(const DiscretePair& pair, const DivergenceGenerator& gen,
                                   const TestFunction& phi, double tolerance) {
  ChainReport report{};
  const double mean_phi = expectation_p(pair, phi);
  report.divergence = exact_divergence(pair, gen);
  report.restricted = mean_phi - restricted_conjugate_value(pair, gen, phi);
  report.unrestricted = mean_phi - unrestricted_conjugate_value(pair, gen, phi);
  report.upper_slack = report.divergence - report.restricted;
  report.lower_slack = report.restricted - report.unrestricted;
  if (!(report.upper_slack >= -tolerance) || !(report.lower_slack >= -tolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "tightness chain violated for generator " << gen.name << ": divergence "
        << report.divergence << ", restricted " << report.restricted << ", unrestricted "
        << report.unrestricted << "; instance " << describe(pair, phi);
    throw CertificationFailure(msg.str());
  }
  return report;
}

TestFunction optimal_phi(const DiscretePair& pair, const DivergenceGenerator& gen) {
  VectorXd phi(pair.support_size());
  for (Index i = 0; i < pair.support_size(); ++i) {
    const double ratio = pair.p()[i] / pair.q()[i];
    if (ratio == 0.0 && std::isinf(gen.fprime_limit_at_zero)) {
      throw DomainError("optimal_phi: p has a zero entry where f'(0+) = -inf for generator '" +
                        gen.name + "'; smooth p away from zero first");
    }
    phi[i] = ratio == 0.0 ? gen.fprime_limit_at_zero : gen.fprime(ratio);
  }
  return TestFunction(std::move(phi));
}

KlChainReport verify_kl_specialization(const DiscretePair& pair, const TestFunction& phi,
                                       double tolerance) {
  check_support(pair, phi);
  const auto kl = make_generator("kl");
  const VectorXd& values = phi.values();
  const double shift = values.maxCoeff();
  const double scaled = pair.q().dot((values.array() - shift).exp().matrix());
  const double log_mean_exp = shift + std::log(scaled);
  const double mean_exp = std::exp(shift) * scaled;
  const double mean_phi = expectation_p(pair, phi);

  KlChainReport report{};
  report.kl = exact_divergence(pair, kl);
  report.donsker_varadhan = mean_phi - log_mean_exp;
  report.looser = mean_phi - mean_exp + 1.0;
  report.first_slack = report.kl - report.donsker_varadhan;
  report.second_slack = report.donsker_varadhan - report.looser;
  if (!(report.first_slack >= -tolerance) || !(report.second_slack >= -tolerance) ||
      !(log_mean_exp <= mean_exp - 1.0 + tolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "KL specialisation violated: kl " << report.kl << ", DV " << report.donsker_varadhan
        << ", looser " << report.looser << "; instance " << describe(pair, phi);
    throw CertificationFailure(msg.str());
  }
  return report;
}

}  // namespace fdivergence
