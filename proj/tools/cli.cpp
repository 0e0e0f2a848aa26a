#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "fdiv/bench.hpp"
#include "fdiv/errors.hpp"
#include "fdiv/estimators.hpp"
#include "fdiv/oracle_battery.hpp"
#include "fdiv/sample_io.hpp"

namespace fdivergence::cli {
namespace {

using nlohmann::json;

std::string fmt(double value, const char* spec = "%.10g") {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, spec, value);
  return buffer;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct EstimateArgs {
  std::string x_path;
  std::string y_path;
  std::string estimator = "restricted";
  std::string generator = "kl";
  std::optional<double> lambda;
  double lambda_c = 1.0;
  std::optional<double> bandwidth;
  std::string bandwidth_rule = "pooled_trace";
  std::string delimiter;
  bool skip_header = false;
  double tol = 1e-8;
  int max_iters = 50000;
  std::string output;
};

int cmd_estimate(const EstimateArgs& args, std::ostream& out) {
  EstimatorConfig config;
  config.generator = make_generator(args.generator);
  config.lambda = args.lambda;
  config.lambda_c = args.lambda_c;
  if (args.bandwidth) config.kernel = KernelSpec(*args.bandwidth);
  config.bandwidth_rule = args.bandwidth_rule == "pooled_coordinate_mean"
                              ? BandwidthRule::pooled_coordinate_mean
                              : BandwidthRule::pooled_trace;
  config.solver_tol = args.tol;
  config.solver_max_iters = args.max_iters;

  SampleFormat format;
  if (!args.delimiter.empty()) format.delimiter = args.delimiter == "\\t" ? '\t' : args.delimiter[0];
  format.skip_header = args.skip_header;
  const SampleMatrix x = read_sample_file(args.x_path, format);
  const SampleMatrix y = read_sample_file(args.y_path, format);

  const EstimateResult result = estimate(parse_estimator_kind(args.estimator), x, y, config);
  out << "estimator:           " << to_string(result.kind) << "\n"
      << "generator:           " << config.generator.name << "\n"
      << "n:                   " << y.rows() << "\n"
      << "dims:                " << y.cols() << "\n"
      << "lambda:              " << fmt(result.lambda) << "\n"
      << "bandwidth:           " << fmt(result.bandwidth) << "\n"
      << "divergence_estimate: " << fmt(result.divergence_estimate) << "\n"
      << "objective_value:     " << fmt(result.objective_value) << "\n"
      << "mmd_squared:         " << fmt(result.mmd_term) << "\n"
      << "iterations:          " << result.report.iterations << "\n"
      << "kkt_residual:        " << fmt(result.report.kkt_residual, "%.3e") << "\n"
      << "converged:           " << (result.report.converged ? "yes" : "no") << "\n";

  if (!args.output.empty()) {
    json doc = {{"estimator", to_string(result.kind)},
                {"generator", config.generator.name},
                {"n", y.rows()},
                {"dims", y.cols()},
                {"lambda", result.lambda},
                {"bandwidth", result.bandwidth},
                {"divergence_estimate", result.divergence_estimate},
                {"objective_value", result.objective_value},
                {"mmd_squared", result.mmd_term},
                {"alpha", to_std(result.alpha)},
                {"density_ratio_at_y", to_std(result.density_ratio_at_y)},
                {"iterations", result.report.iterations},
                {"kkt_residual", result.report.kkt_residual},
                {"converged", result.report.converged}};
    std::ofstream file(args.output);
    if (!file) throw PreconditionError("cannot write '" + args.output + "'");
    file << doc.dump(2) << "\n";
  }
  return result.report.converged ? kOk : kNotConverged;
}

struct BenchArgs {
  std::string config_path;
  unsigned workers = 0;
  bool timings = false;
  std::string output;
  std::string summary;
  std::optional<std::uint64_t> seed;
  std::optional<long> runs;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  ExperimentConfig config = load_experiment_config(args.config_path);
  if (!args.output.empty()) config.output_path = args.output;
  if (!args.summary.empty()) config.summary_path = args.summary;
  if (args.seed) config.seed = *args.seed;
  if (args.runs) config.runs = *args.runs;
  if (args.timings) config.record_wall_time = true;
  config.validate();
  if (config.output_path.empty()) {
    throw ConfigError("no output_path in config and no --output given", {"output_path"});
  }

  const unsigned workers = args.workers ? args.workers : std::max(1u, std::thread::hardware_concurrency());
  const BenchResults results = run_bench(config, workers);

  std::ofstream records(config.output_path, std::ios::binary);
  if (!records) throw ConfigError("cannot write '" + config.output_path + "'", {"output_path"});
  write_records(records, config, results);
  const std::string summary_path = config.resolved_summary_path();
  std::ofstream summary(summary_path);
  if (!summary) throw ConfigError("cannot write '" + summary_path + "'", {"summary_path"});
  summary << summary_json(config, results).dump(2) << "\n";

  print_summary(out, config, results);
  long failed = 0;
  for (const auto& r : results.records) failed += r.converged ? 0 : 1;
  out << results.records.size() << " records written to " << config.output_path << " ("
      << failed << " not converged); summary in " << summary_path << "\n";
  return kOk;
}

struct OracleArgs {
  long trials = 1000;
  int max_support = 8;
  std::vector<std::string> generators;
  std::uint64_t seed = 0;
  bool inject_fault = false;
};

void print_stats(std::ostream& out, const char* label, const OracleCheckStats& s) {
  if (s.passed + s.failed == 0) return;
  char line[128];
  std::snprintf(line, sizeof line, "  %-18s %6ld passed %6ld failed   worst %+.3e\n", label,
                s.passed, s.failed, s.worst);
  out << line;
}

int cmd_oracle_check(const OracleArgs& args, std::ostream& out, std::ostream& err) {
  OracleBatteryOptions options;
  options.trials = args.trials;
  options.max_support = args.max_support;
  if (!args.generators.empty()) {
    for (const auto& name : args.generators) make_generator(name);
    options.generators = args.generators;
  }
  options.seed = args.seed;
  if (args.inject_fault) options.mutate_generator = inject_conjugate_fault;

  const OracleBatteryReport report = run_oracle_battery(options);
  for (const auto& g : report.generators) {
    out << g.generator << " (" << g.trials << " trials)\n";
    print_stats(out, "chain", g.chain);
    print_stats(out, "shift", g.shift);
    print_stats(out, "ordering", g.ordering);
    print_stats(out, "attainment", g.attainment);
    print_stats(out, "ascent", g.ascent);
    print_stats(out, "kl_specialization", g.kl_specialization);
    print_stats(out, "kl_tightness", g.kl_tightness);
    if (g.gap_samples > 0) {
      out << "  strict gaps        " << g.strict_gaps << "/" << g.gap_samples << "\n";
    }
  }
  if (report.all_passed()) {
    out << "oracle-check: all checks passed\n";
    return kOk;
  }
  err << "oracle-check: " << report.failures.size() << " failures\n";
  const std::size_t shown = std::min<std::size_t>(report.failures.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& f = report.failures[i];
    json entry = {{"check", f.check}, {"detail", f.detail}, {"instance", f.instance}};
    err << entry.dump() << "\n";
  }
  return kCertificationFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-sample f-divergence estimation with simplex-restricted kernel estimators", "fdiv"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate a divergence from two sample files");
  estimate_cmd->add_option("x", est.x_path, "Sample from P, one point per line")->required()->check(CLI::ExistingFile);
  estimate_cmd->add_option("y", est.y_path, "Sample from Q, one point per line")->required()->check(CLI::ExistingFile);
  estimate_cmd->add_option("--estimator", est.estimator)
      ->check(CLI::IsMember({"restricted", "norm_ball", "nwj"}))->capture_default_str();
  estimate_cmd->add_option("--generator", est.generator)
      ->check(CLI::IsMember(generator_names()))->capture_default_str();
  estimate_cmd->add_option("--lambda", est.lambda, "Regularisation lambda (overrides --lambda-c)")
      ->check(CLI::PositiveNumber);
  estimate_cmd->add_option("--lambda-c", est.lambda_c, "lambda = c / n")->check(CLI::PositiveNumber)->capture_default_str();
  estimate_cmd->add_option("--bandwidth", est.bandwidth, "Fixed kernel bandwidth sigma in exp(-|a-b|^2/sigma)")
      ->check(CLI::PositiveNumber);
  estimate_cmd->add_option("--bandwidth-rule", est.bandwidth_rule)
      ->check(CLI::IsMember({"pooled_trace", "pooled_coordinate_mean"}))->capture_default_str();
  estimate_cmd->add_option("--delimiter", est.delimiter, "Field delimiter (default: auto)");
  estimate_cmd->add_flag("--skip-header", est.skip_header, "Ignore the first line of each file");
  estimate_cmd->add_option("--tol", est.tol)->check(CLI::PositiveNumber)->capture_default_str();
  estimate_cmd->add_option("--max-iters", est.max_iters)->check(CLI::PositiveNumber)->capture_default_str();
  estimate_cmd->add_option("--output", est.output, "Write the full result as JSON");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a beta-distribution experiment from a config file");
  bench_cmd->add_option("config", bench.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--workers", bench.workers, "Worker threads (default: hardware concurrency)");
  bench_cmd->add_flag("--timings", bench.timings, "Add a wall-time column to the records");
  bench_cmd->add_option("--output", bench.output, "Override output_path");
  bench_cmd->add_option("--summary", bench.summary, "Override summary_path");
  bench_cmd->add_option("--seed", bench.seed, "Override seed");
  bench_cmd->add_option("--runs", bench.runs, "Override runs")->check(CLI::PositiveNumber);

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Certify the variational inequality chain on random discrete instances");
  oracle_cmd->add_option("--trials", oracle.trials, "Random instances per generator")->capture_default_str();
  oracle_cmd->add_option("--max-support", oracle.max_support)->check(CLI::Range(2, 64))->capture_default_str();
  oracle_cmd->add_option("--generators", oracle.generators, "Subset of generators")->delimiter(',');
  oracle_cmd->add_option("--seed", oracle.seed)->capture_default_str();
  oracle_cmd->add_flag("--inject-fault", oracle.inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (oracle_cmd->parsed() && oracle.trials < 1) {
    err << "oracle-check: --trials must be at least 1\n";
    return kUsage;
  }

  try {
    if (estimate_cmd->parsed()) return cmd_estimate(est, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
    return cmd_oracle_check(oracle, out, err);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CertificationFailure& e) {
    err << "certification failure: " << e.what() << "\n";
    return kCertificationFailure;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNotConverged;
  } catch (const UnsupportedGenerator& e) {
    err << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kPrecondition;
  }
}

}  // namespace fdivergence::cli
