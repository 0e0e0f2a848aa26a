#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace cli = fdivergence::cli;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "fdiv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome outcome;
  outcome.code = cli::run(int(argv.size()), argv.data(), out, err);
  outcome.out = out.str();
  outcome.err = err.str();
  return outcome;
}

std::string data(const std::string& name) { return std::string(FDIV_TEST_DATA_DIR) + "/" + name; }

double field(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ":");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 1));
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("estimate on identical samples is zero") {
  for (const char* estimator : {"restricted", "norm_ball"}) {
    CAPTURE(std::string(estimator));
    const Outcome o = run({"estimate", data("beta_1_2.csv"), data("beta_1_2.csv"), "--estimator", estimator});
    CHECK(o.code == cli::kOk);
    CHECK(std::abs(field(o.out, "divergence_estimate")) <= 1e-6);
  }
  // the orthant weights need not sum to one, so NWJ is only small here
  const Outcome nwj = run({"estimate", data("beta_1_2.csv"), data("beta_1_2.csv"), "--estimator", "nwj"});
  CHECK(nwj.code == cli::kOk);
  CHECK(std::abs(field(nwj.out, "divergence_estimate")) <= 0.1);
}

TEST_CASE("estimate on the beta fixture") {
  const std::string json_path = "cli_estimate.json";
  const Outcome o = run({"estimate", data("beta_1_2.csv"), data("beta_2_1.csv"), "--output", json_path});
  CHECK(o.code == cli::kOk);
  const double value = field(o.out, "divergence_estimate");
  CHECK(value >= 0.6);
  CHECK(value <= 1.2);
  CHECK(field(o.out, "lambda") == doctest::Approx(0.01));
  CHECK(o.out.find("converged:           yes") != std::string::npos);

  const auto doc = nlohmann::json::parse(read_all(json_path));
  CHECK(doc["alpha"].size() == 100);
  CHECK(doc["density_ratio_at_y"].size() == 100);
  CHECK(doc["divergence_estimate"].get<double>() == doctest::Approx(value).epsilon(1e-9));
  std::remove(json_path.c_str());

  const Outcome fixed = run({"estimate", data("beta_1_2.csv"), data("beta_2_1.csv"), "--lambda", "0.5",
                             "--bandwidth", "0.2", "--generator", "squared_hellinger"});
  CHECK(fixed.code == cli::kOk);
  CHECK(field(fixed.out, "lambda") == 0.5);
  CHECK(field(fixed.out, "bandwidth") == 0.2);
  CHECK(field(fixed.out, "divergence_estimate") >= 0.0);
  CHECK(field(fixed.out, "divergence_estimate") <= 2.0);
}

TEST_CASE("estimate failures map to exit codes") {
  CHECK(run({"estimate", data("two_rows.csv"), data("three_rows.csv")}).code == cli::kPrecondition);
  const Outcome parse = run({"estimate", data("malformed.csv"), data("three_rows.csv")});
  CHECK(parse.code == cli::kParseFailure);
  CHECK(parse.err.find("line 2") != std::string::npos);
  CHECK(run({"estimate", data("three_rows.csv"), data("three_rows.csv"), "--estimator", "magic"}).code ==
        cli::kUsage);
  CHECK(run({"estimate", data("three_rows.csv"), data("no_such_file.csv")}).code == cli::kUsage);
  CHECK(run({"estimate", data("three_rows.csv")}).code == cli::kUsage);
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("oracle-check") {
  const Outcome ok = run({"oracle-check", "--trials", "20", "--generators", "kl,total_variation"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.find("all checks passed") != std::string::npos);
  CHECK(run({"oracle-check", "--trials", "0"}).code == cli::kUsage);
  CHECK(run({"oracle-check", "--generators", "nonsense"}).code == cli::kUsage);
  const Outcome broken = run({"oracle-check", "--trials", "20", "--inject-fault"});
  CHECK(broken.code == cli::kCertificationFailure);
  CHECK(broken.err.find("failures") != std::string::npos);
}

TEST_CASE("bench") {
  CHECK(run({"bench", data("bad_config.json"), "--output", "bad.csv"}).code == cli::kConfigError);

  const std::string config_path = "cli_bench.json";
  std::ofstream(config_path) << R"({"rows": [{"p": [1, 2], "q": [2, 1]}], "n": 10, "runs": 2,
    "dims": [1, 2], "seed": 5, "output_path": "cli_bench.csv"})";
  const Outcome one = run({"bench", config_path, "--workers", "1"});
  CHECK(one.code == cli::kOk);
  CHECK(one.out.find("B(1,2) vs B(2,1)") != std::string::npos);
  const std::string first = read_all("cli_bench.csv");
  const Outcome three = run({"bench", config_path, "--workers", "3"});
  CHECK(three.code == cli::kOk);
  CHECK(read_all("cli_bench.csv") == first);
  CHECK(first.find("\"B(1,2)|B(2,1)\",1,2,2,1,2,restricted,1,") != std::string::npos);

  const auto summary = nlohmann::json::parse(read_all("cli_bench.csv.summary.json"));
  CHECK(summary["cells"].size() == 4);

  CHECK(run({"bench", config_path, "--runs", "1", "--seed", "6", "--timings"}).code == cli::kOk);
  CHECK(read_all("cli_bench.csv").find("wall_time_s") != std::string::npos);

  std::ofstream(config_path) << R"({"rows": [{"p": [1, 2], "q": [2, 1]}], "n": 10, "runs": 1})";
  CHECK(run({"bench", config_path}).code == cli::kConfigError);
  std::ofstream(config_path) << "{ not json";
  CHECK(run({"bench", config_path, "--output", "x.csv"}).code == cli::kConfigError);
  for (const char* path : {"cli_bench.json", "cli_bench.csv", "cli_bench.csv.summary.json"}) std::remove(path);
}
