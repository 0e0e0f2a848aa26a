#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "fdiv/generators.hpp"
#include "fdiv/types.hpp"

namespace fdivergence {

/// Deterministic random stream keyed by (seed, stream_id).
///
/// The engine is std::mt19937_64 (fully specified by the standard) seeded with
/// a SplitMix64 mix of the pair. Uniforms take the top 53 bits; normals use the
/// Marsaglia polar method. No std:: distribution objects are used, so the
/// sequence does not depend on the standard library implementation.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses Gamma(shape + 1) * U^(1/shape).
double gamma_variate(SeededStream& stream, double shape);

VectorXd sample_gamma(SeededStream& stream, double shape, Index n);

/// n x 1 matrix of B(alpha, beta) draws via X / (X + Y) with gamma variates; entries in (0, 1).
SampleMatrix sample_beta(SeededStream& stream, const BetaParams& params, Index n);

/// Appends extra_dims columns of N(0, noise_variance) noise to a one-column sample.
SampleMatrix embed_with_noise(SeededStream& stream, const SampleMatrix& base, Index extra_dims,
                              double noise_variance);

}  // namespace fdivergence
