#include "fdiv/sampling.hpp"

#include <cmath>

#include "fdiv/errors.hpp"

namespace fdivergence {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

SeededStream::SeededStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(splitmix64(seed ^ splitmix64(stream_id))) {}

double SeededStream::uniform() {
  return (double(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededStream::normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * scale;
  return u * scale;
}

double gamma_variate(SeededStream& stream, double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("gamma shape must be positive");
  if (shape < 1.0) {
    const double boosted = gamma_variate(stream, shape + 1.0);
    return boosted * std::pow(stream.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

VectorXd sample_gamma(SeededStream& stream, double shape, Index n) {
  if (n < 0) throw DomainError("sample size must be nonnegative");
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) out[i] = gamma_variate(stream, shape);
  return out;
}

SampleMatrix sample_beta(SeededStream& stream, const BetaParams& params, Index n) {
  if (n < 1) throw DomainError("sample size must be at least 1");
  SampleMatrix out(n, 1);
  for (Index i = 0; i < n; ++i) {
    double value;
    do {
      const double a = gamma_variate(stream, params.alpha);
      const double b = gamma_variate(stream, params.beta);
      value = a / (a + b);
    } while (!(value > 0.0 && value < 1.0));
    out(i, 0) = value;
  }
  return out;
}

SampleMatrix embed_with_noise(SeededStream& stream, const SampleMatrix& base, Index extra_dims,
                              double noise_variance) {
  if (base.cols() != 1) throw DimensionMismatch("noise embedding expects a one-column sample");
  if (extra_dims < 0) throw DomainError("extra_dims must be nonnegative");
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw DomainError("noise variance must be positive");
  }
  SampleMatrix out(base.rows(), 1 + extra_dims);
  out.col(0) = base.col(0);
  const double sd = std::sqrt(noise_variance);
  // row-major fill keeps each point's noise contiguous in the stream
  for (Index i = 0; i < base.rows(); ++i) {
    for (Index j = 1; j <= extra_dims; ++j) out(i, j) = sd * stream.normal();
  }
  return out;
}

}  // namespace fdivergence
