#pragma once

#include <cstdint>

#include "fairdtd/graph.hpp"
#include "fairdtd/keyvalue.hpp"

namespace fairdtd {

/// Parameters of the biased stochastic block model.
///
/// Generation order (all draws from one Rng seeded with `seed`):
///   1. class direction u and leakage direction v, each F i.i.d. normals
///      scaled to unit length;
///   2. per node: S ~ Bernoulli(sensitive_balance); with probability
///      label_sensitive_corr Y = S, otherwise Y ~ Bernoulli(0.5);
///   3. per node: x = class_separation*(2Y-1)*u
///                    + sensitive_leakage*(2S-1)*v + noise_std*N(0, I);
///   4. per pair i < j in row-major order: an edge with probability
///      (S_i == S_j ? p_intra : p_inter) * (Y_i == Y_j ? 1 : 1 - label_homophily).
/// With balanced groups corr(Y, S) equals label_sensitive_corr.
struct SyntheticSpec {
  std::size_t num_nodes = 1000;
  double sensitive_balance = 0.5;
  double label_sensitive_corr = 0.7;
  double p_intra = 0.02;
  double p_inter = 0.004;
  double label_homophily = 0.0;
  std::size_t num_features = 16;
  double class_separation = 1.0;
  double sensitive_leakage = 0.5;
  double noise_std = 1.0;
  std::uint64_t seed = 1;

  /// Throws ConfigError when a probability leaves [0, 1] or a size is 0.
  void validate() const;
  void to_manifest(KeyValue& kv) const;
};

/// Standard biased benchmark: N = 1000, corr(Y, S) = 0.7, intra/inter edge
/// probability 5:1, label homophily 0.5, weak feature leakage.
SyntheticSpec standard_fixture(std::uint64_t seed = 1);

/// Deterministic in `spec.seed`. Splits are left empty.
Graph generate_biased_sbm(const SyntheticSpec& spec);

/// Edge density among same-sensitive pairs divided by the density among
/// cross-group pairs. Throws UndefinedMetricError if either is undefined.
double sensitive_homophily_ratio(const Graph& g);

}  // namespace fairdtd
