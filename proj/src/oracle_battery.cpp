#include "fdiv/oracle_battery.hpp"

#include <algorithm>
#include <cmath>

#include "fdiv/discrete_oracle.hpp"
#include "fdiv/errors.hpp"
#include "fdiv/sampling.hpp"

namespace fdivergence {
namespace {

using nlohmann::json;

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd dirichlet_one(SeededStream& stream, Index m) {
  VectorXd g = sample_gamma(stream, 1.0, m);
  return g / g.sum();
}

double mid_value(const DiscretePair& pair, const DivergenceGenerator& gen, const VectorXd& phi) {
  return pair.p().dot(phi) - restricted_conjugate_value(pair, gen, TestFunction(phi));
}

// Gradient ascent on phi -> E_P[phi] - R*(phi). The gradient is p - q * r(phi)
// with r the maximising density, and the function is concave, so a short run
// from a random start gets close to the supremum without exceeding it.
double numeric_ascent(const DiscretePair& pair, const DivergenceGenerator& gen, VectorXd phi,
                      int steps) {
  double value = mid_value(pair, gen, phi);
  double eta = 1.0;
  for (int k = 0; k < steps && eta > 1e-12; ++k) {
    const VectorXd r = restricted_conjugate_density(pair, gen, TestFunction(phi));
    const VectorXd grad = pair.p() - pair.q().cwiseProduct(r);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-13) break;
    while (eta > 1e-12) {
      const VectorXd trial = phi + eta * grad;
      const double trial_value = mid_value(pair, gen, trial);
      if (std::isfinite(trial_value) && trial_value >= value) {
        phi = trial;
        value = trial_value;
        eta *= 2.0;
        break;
      }
      eta *= 0.5;
    }
  }
  return value;
}

void record(OracleCheckStats& stats, bool ok, double worst_candidate, bool lower_is_worse) {
  (ok ? stats.passed : stats.failed) += 1;
  if (stats.passed + stats.failed == 1) stats.worst = worst_candidate;
  else if (lower_is_worse) stats.worst = std::min(stats.worst, worst_candidate);
  else stats.worst = std::max(stats.worst, worst_candidate);
}

}  // namespace

bool OracleBatteryReport::all_passed() const {
  if (!failures.empty()) return false;
  for (const auto& g : generators) {
    if (g.gap_samples > 0 &&
        double(g.strict_gaps) < kMinStrictGapFraction * double(g.gap_samples)) {
      return false;
    }
  }
  return true;
}

void inject_conjugate_fault(DivergenceGenerator& generator) {
  generator.fstar = [inner = generator.fstar](double u) { return inner(u) - 1.0; };
}

OracleBatteryReport run_oracle_battery(const OracleBatteryOptions& options) {
  if (options.trials < 1) throw PreconditionError("oracle battery needs trials >= 1");
  if (options.max_support < 2) throw PreconditionError("oracle battery needs max_support >= 2");

  OracleBatteryReport report;
  for (std::size_t g = 0; g < options.generators.size(); ++g) {
    DivergenceGenerator gen = make_generator(options.generators[g]);
    if (options.mutate_generator) options.mutate_generator(gen);
    const bool is_kl = gen.name == "kl";

    GeneratorReport rep;
    rep.generator = gen.name;
    SeededStream stream(options.seed, splitmix64(0x6f7261636c65ull + g));

    for (long trial = 0; trial < options.trials; ++trial) {
      const Index m = 2 + Index(stream.uniform() * double(options.max_support - 1));
      const DiscretePair pair(dirichlet_one(stream, m), dirichlet_one(stream, m));
      VectorXd phi(m);
      for (Index i = 0; i < m; ++i) phi[i] = -3.0 + 6.0 * stream.uniform();
      const double shift = -5.0 + 10.0 * stream.uniform();
      ++rep.trials;

      json instance = {{"generator", gen.name},
                       {"p", to_std(pair.p())},
                       {"q", to_std(pair.q())},
                       {"phi", to_std(phi)}};
      auto fail = [&](const std::string& check, const std::string& detail) {
        report.failures.push_back({gen.name, check, detail, instance});
      };

      try {
        const ChainReport chain = verify_tightness_chain(pair, gen, TestFunction(phi));
        record(rep.chain, true, std::min(chain.upper_slack, chain.lower_slack), true);
        if (is_kl) {
          const double gap = chain.restricted - chain.unrestricted;
          ++rep.gap_samples;
          if (gap > 0.0) ++rep.strict_gaps;
          if (gap < -1e-12) fail("kl_gap", "restricted - unrestricted = " + std::to_string(gap));
        }
      } catch (const CertificationFailure& e) {
        record(rep.chain, false, -1.0, true);
        fail("chain", e.what());
      }

      const double base = restricted_conjugate_value(pair, gen, TestFunction(phi));
      const double shifted =
          restricted_conjugate_value(pair, gen, TestFunction(phi.array() + shift));
      const double shift_error = std::abs(shifted - base - shift);
      record(rep.shift, shift_error <= 1e-9, shift_error, false);
      if (shift_error > 1e-9) fail("shift", "error " + std::to_string(shift_error));

      const double unrestricted = unrestricted_conjugate_value(pair, gen, TestFunction(phi));
      const double order_slack = unrestricted - base;
      record(rep.ordering, order_slack >= -1e-9, std::isfinite(order_slack) ? order_slack : 0.0, true);
      if (order_slack < -1e-9) fail("ordering", "unrestricted - restricted = " + std::to_string(order_slack));

      const double divergence = exact_divergence(pair, gen);
      const VectorXd best_phi = optimal_phi(pair, gen).values();
      const double attained = mid_value(pair, gen, best_phi);
      const double attain_error = std::abs(divergence - attained);
      record(rep.attainment, attain_error <= 1e-6, attain_error, false);
      if (attain_error > 1e-6) fail("attainment", "|I_f - mid(phi*)| = " + std::to_string(attain_error));

      if (gen.has_invertible_derivative() && trial < options.ascent_trials) {
        const double climbed = numeric_ascent(pair, gen, phi, 60);
        const double excess = climbed - attained;
        record(rep.ascent, excess <= 1e-6, excess, false);
        if (excess > 1e-6) fail("ascent", "numeric ascent exceeds mid(phi*) by " + std::to_string(excess));
      }

      if (is_kl) {
        try {
          const KlChainReport kl = verify_kl_specialization(pair, TestFunction(phi));
          record(rep.kl_specialization, true, std::min(kl.first_slack, kl.second_slack), true);
        } catch (const CertificationFailure& e) {
          record(rep.kl_specialization, false, -1.0, true);
          fail("kl_specialization", e.what());
        }
        const VectorXd log_ratio = pair.ratio().array().log();
        const KlChainReport tight = verify_kl_specialization(pair, TestFunction(log_ratio));
        const double tight_error = std::abs(tight.first_slack);
        record(rep.kl_tightness, tight_error <= 1e-9, tight_error, false);
        if (tight_error > 1e-9) fail("kl_tightness", "DV slack at ln(p/q) = " + std::to_string(tight_error));
      }
    }
    report.generators.push_back(rep);
  }
  return report;
}

}  // namespace fdivergence
