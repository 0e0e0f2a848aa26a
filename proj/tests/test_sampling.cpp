#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fdiv/errors.hpp"
#include "fdiv/sampling.hpp"

using namespace fdivergence;

namespace {

double mean(const VectorXd& v) { return v.mean(); }

double variance(const VectorXd& v) {
  const double mu = v.mean();
  return (v.array() - mu).square().sum() / double(v.size() - 1);
}

double correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd da = a.array() - a.mean();
  const VectorXd db = b.array() - b.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

// Gamma(3) CDF tabulated by cumulative Simpson integration of x^2 e^{-x} / 2.
struct GammaThreeCdf {
  static constexpr double kStep = 1e-3;
  static constexpr double kMax = 60.0;
  std::vector<double> table;

  GammaThreeCdf() {
    auto density = [](double x) { return 0.5 * x * x * std::exp(-x); };
    const int cells = int(kMax / kStep);
    table.assign(std::size_t(cells) + 1, 0.0);
    for (int i = 0; i < cells; ++i) {
      const double a = i * kStep, b = a + kStep;
      table[std::size_t(i) + 1] =
          table[std::size_t(i)] + kStep / 6.0 * (density(a) + 4.0 * density(0.5 * (a + b)) + density(b));
    }
  }

  double operator()(double x) const {
    if (x >= kMax) return 1.0;
    const double pos = x / kStep;
    const auto i = std::size_t(pos);
    const double frac = pos - double(i);
    return table[i] + frac * (table[i + 1] - table[i]);
  }
};

}  // namespace

TEST_CASE("streams are deterministic and distinct") {
  SeededStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_by_stream = false, differs_by_seed = false;
  for (int i = 0; i < 1000; ++i) {
    const double ua = a.uniform();
    CHECK(ua == b.uniform());
    CHECK(ua > 0.0);
    CHECK(ua < 1.0);
    differs_by_stream |= ua != c.uniform();
    differs_by_seed |= ua != d.uniform();
  }
  CHECK(differs_by_stream);
  CHECK(differs_by_seed);
  CHECK(a.seed() == 42);
  CHECK(a.stream_id() == 7);

  SeededStream s1(1, 2), s2(1, 2);
  const SampleMatrix m1 = sample_beta(s1, BetaParams(2, 5), 500);
  const SampleMatrix m2 = sample_beta(s2, BetaParams(2, 5), 500);
  CHECK((m1.array() == m2.array()).all());
}

TEST_CASE("frozen sequence") {
  // Recorded from this implementation; a change in engine seeding, bit
  // extraction or variate algorithm breaks reproducibility of old results.
  SeededStream s(20160607, 0);
  CHECK(s.uniform() == 0.050032243572886326);
  CHECK(s.normal() == 0.4136074505267584);
  CHECK(gamma_variate(s, 3.0) == 0.71967987384307419);
  CHECK(sample_beta(s, BetaParams(2, 2), 1)(0, 0) == 0.344741839634574);
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("uniform and normal moments") {
  SeededStream s(3, 1);
  const Index n = 100000;
  VectorXd u(n), z(n);
  for (Index i = 0; i < n; ++i) u[i] = s.uniform();
  for (Index i = 0; i < n; ++i) z[i] = s.normal();
  CHECK(std::abs(mean(u) - 0.5) <= 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(variance(u) - 1.0 / 12.0) <= 0.05 / 12.0);
  CHECK(std::abs(mean(z)) <= 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(variance(z) - 1.0) <= 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gamma variates") {
  const Index n = 100000;
  for (double shape : {0.3, 1.0, 2.5, 3.0, 14.0}) {
    SeededStream s(5, std::uint64_t(shape * 10));
    const VectorXd g = sample_gamma(s, shape, n);
    CAPTURE(shape);
    CHECK((g.array() > 0.0).all());
    CHECK(std::abs(mean(g) - shape) <= 5.0 * std::sqrt(shape / n));
    // the sample variance has variance about (mu4 - sigma^4) / n, with mu4 = 3k^2 + 6k
    const double se_var = std::sqrt((3.0 * shape * shape + 6.0 * shape - shape * shape) / n);
    CHECK(std::abs(variance(g) - shape) <= 5.0 * se_var);
  }
  SeededStream one(6, 0);
  CHECK(std::abs(mean(sample_gamma(one, 1.0, n)) - 1.0) <= 0.02);

  SeededStream s(7, 3);
  VectorXd g = sample_gamma(s, 3.0, n);
  std::sort(g.data(), g.data() + n);
  const GammaThreeCdf cdf;
  double ks = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double f = cdf(g[i]);
    ks = std::max({ks, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
  }
  CHECK(ks <= 0.01);
  // the tabulated CDF itself against the closed form 1 - e^{-x}(1 + x + x^2/2)
  for (double x : {0.5, 2.0, 3.0, 7.5}) {
    CHECK(std::abs(cdf(x) - (1.0 - std::exp(-x) * (1.0 + x + 0.5 * x * x))) <= 1e-6);
  }

  SeededStream r1(8, 8), r2(8, 8);
  CHECK((sample_gamma(r1, 3.0, 100).array() == sample_gamma(r2, 3.0, 100).array()).all());
  CHECK_THROWS_AS(gamma_variate(r1, 0.0), DomainError);
  CHECK_THROWS_AS(gamma_variate(r1, -1.0), DomainError);
}

TEST_CASE("beta samples") {
  const Index n = 100000;
  SeededStream s(9, 0);
  const SampleMatrix uniform = sample_beta(s, BetaParams(1, 1), n);
  CHECK(uniform.cols() == 1);
  CHECK(std::abs(mean(uniform.col(0)) - 0.5) <= 0.01);

  const SampleMatrix b22 = sample_beta(s, BetaParams(2, 2), n);
  CHECK(std::abs(variance(b22.col(0)) - 0.05) <= 0.005);

  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{1, 2}, {14, 14}, {1, 4}, {0.5, 0.5}, {10, 1}}) {
    const SampleMatrix x = sample_beta(s, BetaParams(a, b), n);
    const double mu = a / (a + b);
    const double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
    CAPTURE(a);
    CAPTURE(b);
    CHECK((x.array() > 0.0).all());
    CHECK((x.array() < 1.0).all());
    CHECK(std::abs(mean(x.col(0)) - mu) <= 5.0 * std::sqrt(var / n));
    CHECK(std::abs(variance(x.col(0)) - var) <= 0.05 * var);
  }
  CHECK_THROWS_AS(sample_beta(s, BetaParams(1, 1), 0), DomainError);
}

TEST_CASE("independence across streams") {
  const Index n = 100000;
  for (std::uint64_t id = 0; id < 5; ++id) {
    SeededStream a(11, id), b(11, id + 1);
    const SampleMatrix x = sample_beta(a, BetaParams(2, 2), n);
    const SampleMatrix y = sample_beta(b, BetaParams(2, 2), n);
    CHECK(std::abs(correlation(x.col(0), y.col(0))) <= 0.02);
  }
}

TEST_CASE("noise embedding") {
  SeededStream s(12, 0);
  const SampleMatrix base = sample_beta(s, BetaParams(2, 4), 100000);
  const SampleMatrix same = embed_with_noise(s, base, 0, 0.01);
  CHECK(same.cols() == 1);
  CHECK((same.array() == base.array()).all());

  const SampleMatrix wide = embed_with_noise(s, base, 9, 0.01);
  CHECK(wide.cols() == 10);
  CHECK((wide.col(0).array() == base.col(0).array()).all());
  for (Index j = 1; j < 10; ++j) {
    CHECK(std::abs(variance(wide.col(j)) - 0.01) <= 0.001);
    CHECK(std::abs(mean(wide.col(j))) <= 5.0 * 0.1 / std::sqrt(1e5));
  }
  CHECK(std::abs(correlation(wide.col(1), wide.col(2))) <= 0.02);

  CHECK_THROWS_AS(embed_with_noise(s, base, 3, 0.0), DomainError);
  CHECK_THROWS_AS(embed_with_noise(s, base, -1, 0.01), DomainError);
  CHECK_THROWS_AS(embed_with_noise(s, wide, 3, 0.01), DimensionMismatch);
}
