#pragma once

#include <cstdint>
#include <string_view>

namespace fairdtd {

/// xoshiro256** seeded through splitmix64. Every distribution below is
/// implemented here rather than taken from <random>, whose distributions
/// are implementation-defined; synthetic datasets must match bit-for-bit
/// across toolchains.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256starstar";
  static constexpr std::string_view kSeeding = "splitmix64(seed) x4";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller (the second variate is cached).
  double normal();
  /// Uniform integer in [0, n) by rejection, unbiased.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Independent stream for a named phase: splitmix64(master ^ fnv1a64(name)).
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

}  // namespace fairdtd
