#pragma once

#include "fdiv/generators.hpp"
#include "fdiv/types.hpp"

namespace fdivergence {

/// Two PMFs on a common finite support, with q > 0 everywhere (so P << Q).
class DiscretePair {
 public:
  static constexpr double kMassTolerance = 1e-12;
  static constexpr double kMinQ = 1e-12;

  DiscretePair(VectorXd p, VectorXd q);

  const VectorXd& p() const { return p_; }
  const VectorXd& q() const { return q_; }
  Index support_size() const { return p_.size(); }
  /// dP/dQ on the support.
  VectorXd ratio() const { return p_.cwiseQuotient(q_); }

 private:
  VectorXd p_;
  VectorXd q_;
};

/// A test function phi on the support; entries must be finite.
class TestFunction {
 public:
  explicit TestFunction(VectorXd phi);
  const VectorXd& values() const { return phi_; }

 private:
  VectorXd phi_;
};

/// sum_i q_i f(p_i / q_i).
double exact_divergence(const DiscretePair& pair, const DivergenceGenerator& gen);

/// E_Q[f*(phi)]; +inf when some phi_i is outside the dual domain.
double unrestricted_conjugate_value(const DiscretePair& pair, const DivergenceGenerator& gen,
                                    const TestFunction& phi);

/// sup over densities r >= 0 with E_Q[r] = 1 of E_Q[phi r - f(r)].
///
/// Differentiable generators solve the KKT system r_i = max(0, (f')^{-1}(phi_i - nu))
/// for the normalisation multiplier nu by bisection. Total variation is a
/// linear program: vertex enumeration for m <= 12, greedy mass transport above.
double restricted_conjugate_value(const DiscretePair& pair, const DivergenceGenerator& gen,
                                  const TestFunction& phi);

/// Maximising density of the restricted conjugate (differentiable generators).
VectorXd restricted_conjugate_density(const DiscretePair& pair, const DivergenceGenerator& gen,
                                      const TestFunction& phi);

/// Total-variation restricted conjugate by exhaustive vertex enumeration (m <= 20).
double total_variation_conjugate_by_enumeration(const DiscretePair& pair, const TestFunction& phi);
/// Total-variation restricted conjugate by greedy mass transport; any m.
double total_variation_conjugate_by_transport(const DiscretePair& pair, const TestFunction& phi);

struct ChainReport {
  double divergence;   ///< I_f(P, Q)
  double restricted;   ///< E_P[phi] - restricted conjugate
  double unrestricted; ///< E_P[phi] - E_Q[f*(phi)]
  double upper_slack;  ///< divergence - restricted
  double lower_slack;  ///< restricted - unrestricted
};

/// Evaluates I_f >= restricted >= unrestricted and throws CertificationFailure
/// when either slack is below -tolerance.
ChainReport verify_tightness_chain(const DiscretePair& pair, const DivergenceGenerator& gen,
                                   const TestFunction& phi, double tolerance = 1e-9);

/// phi_i = f'(p_i / q_i). Throws DomainError when some p_i = 0 and f'(0+) = -inf.
TestFunction optimal_phi(const DiscretePair& pair, const DivergenceGenerator& gen);

struct KlChainReport {
  double kl;
  double donsker_varadhan;  ///< E_P[phi] - ln E_Q[e^phi]
  double looser;            ///< E_P[phi] - E_Q[e^phi] + 1
  double first_slack;
  double second_slack;
};

/// KL >= E_P[phi] - ln E_Q[e^phi] >= E_P[phi] - E_Q[e^phi] + 1; throws CertificationFailure on violation.
KlChainReport verify_kl_specialization(const DiscretePair& pair, const TestFunction& phi,
                                       double tolerance = 1e-9);

}  // namespace fdivergence
