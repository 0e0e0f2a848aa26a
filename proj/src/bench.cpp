#include "fdiv/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

#include "fdiv/errors.hpp"
#include "fdiv/sampling.hpp"

namespace fdivergence {
namespace {

using nlohmann::json;

std::string format_number(double value, const char* spec = "%.17g") {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, spec, value);
  return buffer;
}

std::string bandwidth_rule_name(BandwidthRule rule) {
  return rule == BandwidthRule::pooled_trace ? "pooled_trace" : "pooled_coordinate_mean";
}

auto record_key(const ResultRecord& r) {
  return std::make_tuple(std::cref(r.row), r.dims, to_string(r.estimator), r.run);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string BetaPairRow::descriptor() const {
  return "B(" + format_number(p.alpha, "%g") + "," + format_number(p.beta, "%g") + ")|B(" +
         format_number(q.alpha, "%g") + "," + format_number(q.beta, "%g") + ")";
}

void ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  if (rows.empty()) bad.push_back("rows");
  if (n < 2) bad.push_back("n");
  if (runs < 1) bad.push_back("runs");
  if (dims.empty() || std::any_of(dims.begin(), dims.end(), [](long d) { return d < 1; })) {
    bad.push_back("dims");
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) bad.push_back("noise_variance");
  if (estimators.empty()) bad.push_back("estimators");
  if (generator != "kl") bad.push_back("generator");
  if (!(lambda_c > 0.0) || !std::isfinite(lambda_c)) bad.push_back("lambda_c");
  if (!(solver_tol > 0.0)) bad.push_back("solver_tol");
  if (solver_max_iters < 1) bad.push_back("solver_max_iters");
  if (output_format != "csv" && output_format != "tsv") bad.push_back("output_format");
  if (!bad.empty()) {
    std::string message = "invalid experiment config; offending fields:";
    for (const auto& field : bad) message += " " + field;
    if (generator != "kl") message += " (the truth column is the closed-form beta KL, so generator must be kl)";
    throw ConfigError(message, bad);
  }
}

nlohmann::json ExperimentConfig::canonical_json() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    rows_json.push_back({{"p", {row.p.alpha, row.p.beta}}, {"q", {row.q.alpha, row.q.beta}}});
  }
  json estimators_json = json::array();
  for (auto kind : estimators) estimators_json.push_back(to_string(kind));
  return {{"rows", rows_json},
          {"n", n},
          {"runs", runs},
          {"dims", dims},
          {"noise_variance", noise_variance},
          {"estimators", estimators_json},
          {"generator", generator},
          {"seed", seed},
          {"lambda_c", lambda_c},
          {"bandwidth_rule", bandwidth_rule_name(bandwidth_rule)},
          {"solver_tol", solver_tol},
          {"solver_max_iters", solver_max_iters}};
}

std::string ExperimentConfig::fingerprint() const {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_json().dump())));
  return buffer;
}

EstimatorConfig ExperimentConfig::estimator_config() const {
  EstimatorConfig config;
  config.generator = make_generator(generator);
  config.lambda_c = lambda_c;
  config.bandwidth_rule = bandwidth_rule;
  config.solver_tol = solver_tol;
  config.solver_max_iters = solver_max_iters;
  return config;
}

std::string ExperimentConfig::resolved_summary_path() const {
  if (summary_path) return *summary_path;
  return output_path.empty() ? std::string() : output_path + ".summary.json";
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
  ExperimentConfig config;
  std::vector<std::string> bad;
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object", {"<root>"});

  static const std::vector<std::string> known = {
      "rows",     "n",          "runs",         "dims",        "noise_variance",
      "estimators", "generator", "seed",        "lambda_c",    "bandwidth_rule",
      "solver_tol", "solver_max_iters", "output_path", "output_format", "summary_path",
      "record_wall_time", "description"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) bad.push_back(key);
  }

  auto field = [&](const char* name, auto&& assign) {
    if (!doc.contains(name)) return;
    try {
      assign(doc.at(name));
    } catch (const std::exception&) {
      bad.push_back(name);
    }
  };

  if (!doc.contains("rows")) bad.push_back("rows");
  field("rows", [&](const json& rows) {
    config.rows.clear();
    for (const auto& row : rows.get_ref<const json::array_t&>()) {
      const auto& p = row.at("p");
      const auto& q = row.at("q");
      if (p.size() != 2 || q.size() != 2) throw std::invalid_argument("row");
      config.rows.push_back({BetaParams(p[0].get<double>(), p[1].get<double>()),
                             BetaParams(q[0].get<double>(), q[1].get<double>())});
    }
  });
  field("n", [&](const json& v) { config.n = v.get<long>(); });
  field("runs", [&](const json& v) { config.runs = v.get<long>(); });
  field("dims", [&](const json& v) {
    config.dims = v.is_array() ? v.get<std::vector<long>>() : std::vector<long>{v.get<long>()};
  });
  field("noise_variance", [&](const json& v) { config.noise_variance = v.get<double>(); });
  field("estimators", [&](const json& v) {
    config.estimators.clear();
    for (const auto& name : v.get<std::vector<std::string>>()) {
      config.estimators.push_back(parse_estimator_kind(name));
    }
  });
  field("generator", [&](const json& v) { config.generator = v.get<std::string>(); });
  field("seed", [&](const json& v) { config.seed = v.get<std::uint64_t>(); });
  field("lambda_c", [&](const json& v) { config.lambda_c = v.get<double>(); });
  field("bandwidth_rule", [&](const json& v) {
    const auto name = v.get<std::string>();
    if (name == "pooled_trace") config.bandwidth_rule = BandwidthRule::pooled_trace;
    else if (name == "pooled_coordinate_mean") config.bandwidth_rule = BandwidthRule::pooled_coordinate_mean;
    else throw std::invalid_argument("bandwidth_rule");
  });
  field("solver_tol", [&](const json& v) { config.solver_tol = v.get<double>(); });
  field("solver_max_iters", [&](const json& v) { config.solver_max_iters = v.get<int>(); });
  field("output_path", [&](const json& v) { config.output_path = v.get<std::string>(); });
  field("output_format", [&](const json& v) { config.output_format = v.get<std::string>(); });
  field("summary_path", [&](const json& v) { config.summary_path = v.get<std::string>(); });
  field("record_wall_time", [&](const json& v) { config.record_wall_time = v.get<bool>(); });
  field("description", [&](const json& v) { (void)v.get<std::string>(); });

  if (!bad.empty()) {
    std::string message = "invalid experiment config; offending fields:";
    for (const auto& name : bad) message += " " + name;
    throw ConfigError(message, bad);
  }
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", {"<file>"});
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(), {"<syntax>"});
  }
  return parse_experiment_config(doc);
}

std::uint64_t bench_stream_id(const BetaPairRow& row, long dims, long run) {
  return fnv1a64(row.descriptor() + "|dims=" + std::to_string(dims) + "|run=" + std::to_string(run));
}

const SummaryCell& BenchResults::cell(const std::string& row, long dims,
                                      EstimatorKind estimator) const {
  for (const auto& c : summary) {
    if (c.row == row && c.dims == dims && c.estimator == estimator) return c;
  }
  throw PreconditionError("no summary cell for " + row + " dims=" + std::to_string(dims) + " " +
                          to_string(estimator));
}

BenchResults run_bench(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  const EstimatorConfig estimator_config = config.estimator_config();

  struct Task {
    const BetaPairRow* row;
    long dims;
    long run;
  };
  std::vector<Task> tasks;
  for (const auto& row : config.rows) {
    for (long dims : config.dims) {
      for (long run = 0; run < config.runs; ++run) tasks.push_back({&row, dims, run});
    }
  }

  std::vector<std::vector<ResultRecord>> produced(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      SeededStream stream(config.seed, bench_stream_id(*task.row, task.dims, task.run));
      SampleMatrix x = sample_beta(stream, task.row->p, config.n);
      SampleMatrix y = sample_beta(stream, task.row->q, config.n);
      if (task.dims > 1) {
        x = embed_with_noise(stream, x, task.dims - 1, config.noise_variance);
        y = embed_with_noise(stream, y, task.dims - 1, config.noise_variance);
      }
      const double truth = kl_beta_closed_form(task.row->p, task.row->q);
      for (EstimatorKind kind : config.estimators) {
        ResultRecord record;
        record.row = task.row->descriptor();
        record.params = *task.row;
        record.dims = task.dims;
        record.estimator = kind;
        record.run = task.run;
        record.true_kl = truth;
        const auto start = std::chrono::steady_clock::now();
        try {
          const EstimateResult result = estimate(kind, x, y, estimator_config);
          record.estimate = result.divergence_estimate;
          record.iterations = result.report.iterations;
          record.converged = result.report.converged;
        } catch (const Error&) {
          record.estimate = std::numeric_limits<double>::quiet_NaN();
          record.converged = false;
        }
        record.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.squared_error = (record.estimate - truth) * (record.estimate - truth);
        produced[t].push_back(std::move(record));
      }
    }
  };

  workers = std::max(1u, workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& thread : pool) thread.join();
  }

  BenchResults results;
  for (auto& batch : produced) {
    for (auto& record : batch) results.records.push_back(std::move(record));
  }
  std::sort(results.records.begin(), results.records.end(),
            [](const ResultRecord& a, const ResultRecord& b) { return record_key(a) < record_key(b); });

  for (const auto& record : results.records) {
    if (results.summary.empty() || results.summary.back().row != record.row ||
        results.summary.back().dims != record.dims ||
        results.summary.back().estimator != record.estimator) {
      SummaryCell cell;
      cell.row = record.row;
      cell.dims = record.dims;
      cell.estimator = record.estimator;
      cell.true_kl = record.true_kl;
      results.summary.push_back(cell);
    }
    SummaryCell& cell = results.summary.back();
    ++cell.runs;
    cell.converged_runs += record.converged ? 1 : 0;
    cell.mean_estimate += record.estimate;
    cell.mse += record.squared_error;
  }
  for (auto& cell : results.summary) {
    cell.mean_estimate /= double(cell.runs);
    cell.mse /= double(cell.runs);
  }
  return results;
}

void write_records(std::ostream& out, const ExperimentConfig& config, const BenchResults& results) {
  const char sep = config.output_format == "tsv" ? '\t' : ',';
  out << "# fdiv bench results\n";
  out << "# config_fingerprint=" << config.fingerprint() << "\n";
  out << "# seed=" << config.seed << "\n";
  out << "# config=" << config.canonical_json().dump() << "\n";
  const char* columns[] = {"row", "p_alpha", "p_beta", "q_alpha", "q_beta", "dims", "estimator",
                           "run", "estimate", "true_kl", "squared_error", "iterations", "converged"};
  for (std::size_t i = 0; i < std::size(columns); ++i) out << (i ? std::string(1, sep) : "") << columns[i];
  if (config.record_wall_time) out << sep << "wall_time_s";
  out << '\n';
  // Row descriptors contain commas, so they are quoted in CSV output.
  const std::string quote = sep == ',' ? "\"" : "";
  for (const auto& r : results.records) {
    out << quote << r.row << quote << sep << format_number(r.params.p.alpha, "%g") << sep
        << format_number(r.params.p.beta, "%g") << sep << format_number(r.params.q.alpha, "%g")
        << sep << format_number(r.params.q.beta, "%g") << sep << r.dims << sep
        << to_string(r.estimator) << sep << r.run << sep << format_number(r.estimate) << sep
        << format_number(r.true_kl) << sep << format_number(r.squared_error) << sep
        << r.iterations << sep << (r.converged ? 1 : 0);
    if (config.record_wall_time) out << sep << format_number(r.wall_time_seconds, "%.6f");
    out << '\n';
  }
}

nlohmann::json summary_json(const ExperimentConfig& config, const BenchResults& results) {
  json cells = json::array();
  for (const auto& c : results.summary) {
    cells.push_back({{"row", c.row},
                     {"dims", c.dims},
                     {"estimator", to_string(c.estimator)},
                     {"true_kl", c.true_kl},
                     {"runs", c.runs},
                     {"converged_runs", c.converged_runs},
                     {"mean_estimate", c.mean_estimate},
                     {"mse", c.mse}});
  }
  return {{"config_fingerprint", config.fingerprint()},
          {"seed", config.seed},
          {"config", config.canonical_json()},
          {"cells", cells}};
}

void print_summary(std::ostream& out, const ExperimentConfig& config, const BenchResults& results) {
  out << "Distributions            dims      KL";
  for (auto kind : config.estimators) {
    const auto name = to_string(kind);
    char head[64];
    std::snprintf(head, sizeof head, "  %10s   %8s", name.c_str(), "MSE");
    out << head;
  }
  out << '\n';
  for (const auto& row : config.rows) {
    for (long dims : config.dims) {
      const std::string descriptor = row.descriptor();
      std::string label = descriptor;
      label.replace(label.find('|'), 1, " vs ");
      char head[64];
      std::snprintf(head, sizeof head, "%-24s %4ld %7.3f", label.c_str(), dims,
                    kl_beta_closed_form(row.p, row.q));
      out << head;
      for (auto kind : config.estimators) {
        const auto& c = results.cell(descriptor, dims, kind);
        char cell[64];
        std::snprintf(cell, sizeof cell, "  %10.3f   %8.4f", c.mean_estimate, c.mse);
        out << cell;
      }
      out << '\n';
    }
  }
}

}  // namespace fdivergence
