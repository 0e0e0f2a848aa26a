#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdiv/generators.hpp"

namespace fdivergence {

struct OracleBatteryOptions {
  long trials = 1000;
  int max_support = 8;
  std::vector<std::string> generators = generator_names();
  std::uint64_t seed = 0;
  /// Trials per generator that also run numeric ascent over phi.
  long ascent_trials = 200;
  /// Applied to each generator before testing; used to check the harness catches bugs.
  std::function<void(DivergenceGenerator&)> mutate_generator;
};

struct OracleCheckStats {
  long passed = 0;
  long failed = 0;
  /// Most negative slack (or largest error, for the tolerance checks) seen.
  double worst = 0.0;
};

struct OracleFailure {
  std::string generator;
  std::string check;
  std::string detail;
  /// {"generator", "p", "q", "phi"}: enough to replay the instance.
  nlohmann::json instance;
};

struct GeneratorReport {
  std::string generator;
  long trials = 0;
  OracleCheckStats chain;
  OracleCheckStats shift;
  OracleCheckStats ordering;
  OracleCheckStats attainment;
  OracleCheckStats ascent;
  OracleCheckStats kl_specialization;
  OracleCheckStats kl_tightness;
  /// KL only: fraction of random phi with restricted - unrestricted > 0.
  long strict_gaps = 0;
  long gap_samples = 0;
};

struct OracleBatteryReport {
  std::vector<GeneratorReport> generators;
  std::vector<OracleFailure> failures;
  bool all_passed() const;
};

/// Shifts f* down by one, which breaks the lower inequality of the chain.
void inject_conjugate_fault(DivergenceGenerator& generator);

/// Random discrete pairs (Dirichlet(1) p and q, support 2..max_support) and
/// phi uniform on [-3, 3]^m; checks the full certification battery.
OracleBatteryReport run_oracle_battery(const OracleBatteryOptions& options);

/// Minimum fraction of strictly positive KL gaps required for a pass.
inline constexpr double kMinStrictGapFraction = 0.99;

}  // namespace fdivergence
