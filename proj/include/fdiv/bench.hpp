#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fdiv/estimators.hpp"
#include "fdiv/generators.hpp"

namespace fdivergence {

struct BetaPairRow {
  BetaParams p{1.0, 1.0};
  BetaParams q{1.0, 1.0};

  /// Stable descriptor such as "B(2,2)|B(4,4)".
  std::string descriptor() const;
};

/// Experiment description. The JSON schema is documented in README.md.
struct ExperimentConfig {
  std::vector<BetaPairRow> rows;
  long n = 100;
  long runs = 250;
  std::vector<long> dims = {1};
  double noise_variance = 1e-4;
  std::vector<EstimatorKind> estimators = {EstimatorKind::restricted, EstimatorKind::nwj};
  std::string generator = "kl";
  std::uint64_t seed = 0;
  double lambda_c = 1.0;
  BandwidthRule bandwidth_rule = BandwidthRule::pooled_trace;
  double solver_tol = 1e-8;
  int solver_max_iters = 50000;
  std::string output_path;
  /// "csv" or "tsv".
  std::string output_format = "csv";
  std::optional<std::string> summary_path;
  bool record_wall_time = false;

  /// Throws ConfigError listing every offending field.
  void validate() const;
  /// Canonical JSON of the fields that determine results (no output paths).
  nlohmann::json canonical_json() const;
  /// FNV-1a 64 of canonical_json().dump(), as 16 hex digits.
  std::string fingerprint() const;
  EstimatorConfig estimator_config() const;
  std::string resolved_summary_path() const;
};

/// Parses and validates; throws ConfigError with the offending field names.
ExperimentConfig parse_experiment_config(const nlohmann::json& document);
ExperimentConfig load_experiment_config(const std::string& path);

struct ResultRecord {
  std::string row;
  BetaPairRow params;
  long dims = 1;
  EstimatorKind estimator = EstimatorKind::restricted;
  long run = 0;
  double estimate = 0.0;
  double true_kl = 0.0;
  double squared_error = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
};

struct SummaryCell {
  std::string row;
  long dims = 1;
  EstimatorKind estimator = EstimatorKind::restricted;
  double true_kl = 0.0;
  long runs = 0;
  long converged_runs = 0;
  double mean_estimate = 0.0;
  double mse = 0.0;
};

struct BenchResults {
  /// Sorted by (row descriptor, dims, estimator, run).
  std::vector<ResultRecord> records;
  /// Sorted by (row descriptor, dims, estimator).
  std::vector<SummaryCell> summary;

  const SummaryCell& cell(const std::string& row, long dims, EstimatorKind estimator) const;
};

/// Stream id for one (row, dims, run) cell: FNV-1a of "descriptor|dims=D|run=R".
std::uint64_t bench_stream_id(const BetaPairRow& row, long dims, long run);

/// Runs every (row, dims, run) cell on up to `workers` threads. Output does not
/// depend on the worker count or on row order in the config.
BenchResults run_bench(const ExperimentConfig& config, unsigned workers = 1);

void write_records(std::ostream& out, const ExperimentConfig& config, const BenchResults& results);
nlohmann::json summary_json(const ExperimentConfig& config, const BenchResults& results);
/// Human-readable table in config row order.
void print_summary(std::ostream& out, const ExperimentConfig& config, const BenchResults& results);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace fdivergence
