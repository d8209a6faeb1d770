#pragma once

#include <cstdint>

namespace addgxe {

/// xoshiro256** seeded through SplitMix64. Sampling routines are written out
/// here rather than taken from <random> so draws are identical on every
/// platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1); never returns 0.
  double uniform_open();
  /// Standard normal (Box-Muller, one cached value).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Poisson by sequential inversion; intended for means below about 50.
  long poisson(double mean);
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Stream key for (seed, a, b), e.g. (seed, cell, replicate). Distinct tuples
/// give unrelated streams independent of how work is scheduled.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

inline Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) { return Rng(stream_key(seed, a, b)); }

}  // namespace addgxe
