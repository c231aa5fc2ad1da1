#include "fairdtd/synthetic.hpp"

#include <cmath>
#include <string>

#include "fairdtd/error.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + format_double(p));
  }
}

std::vector<double> unit_direction(Rng& rng, std::size_t dim) {
  std::vector<double> d(dim);
  double norm = 0.0;
  for (double& v : d) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : d) v /= norm;
  return d;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_nodes == 0) throw ConfigError("synthetic graph needs at least one node");
  if (num_features == 0) throw ConfigError("synthetic graph needs at least one feature");
  check_probability(sensitive_balance, "sensitive_balance");
  check_probability(label_sensitive_corr, "label_sensitive_corr (rho)");
  check_probability(p_intra, "p_intra");
  check_probability(p_inter, "p_inter");
  check_probability(label_homophily, "label_homophily");
  if (!(noise_std >= 0.0) || !std::isfinite(class_separation) || !std::isfinite(sensitive_leakage)) {
    throw ConfigError("feature magnitudes must be finite and noise_std >= 0");
  }
}

void SyntheticSpec::to_manifest(KeyValue& kv) const {
  kv.set("synthetic.num_nodes", num_nodes);
  kv.set("synthetic.sensitive_balance", sensitive_balance);
  kv.set("synthetic.label_sensitive_corr", label_sensitive_corr);
  kv.set("synthetic.p_intra", p_intra);
  kv.set("synthetic.p_inter", p_inter);
  kv.set("synthetic.label_homophily", label_homophily);
  kv.set("synthetic.num_features", num_features);
  kv.set("synthetic.class_separation", class_separation);
  kv.set("synthetic.sensitive_leakage", sensitive_leakage);
  kv.set("synthetic.noise_std", noise_std);
  kv.set("synthetic.seed", static_cast<unsigned long long>(seed));
  kv.set("prng", std::string(Rng::kAlgorithm));
  kv.set("prng.seeding", std::string(Rng::kSeeding));
}

SyntheticSpec standard_fixture(std::uint64_t seed) {
  SyntheticSpec s;
  s.num_nodes = 1000;
  s.label_sensitive_corr = 0.7;
  s.p_intra = 0.02;
  s.p_inter = 0.004;
  s.label_homophily = 0.5;
  s.sensitive_leakage = 0.2;
  s.seed = seed;
  return s;
}

Graph generate_biased_sbm(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_nodes;
  const std::size_t f = spec.num_features;
  Rng rng(spec.seed);

  const auto class_dir = unit_direction(rng, f);
  const auto leak_dir = unit_direction(rng, f);

  Graph g;
  g.node_ids.resize(n);
  g.sensitive.resize(n);
  g.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.node_ids[i] = static_cast<std::int64_t>(i);
    const int s = rng.bernoulli(spec.sensitive_balance) ? 1 : 0;
    int y;
    if (rng.bernoulli(spec.label_sensitive_corr)) {
      y = s;
    } else {
      y = rng.bernoulli(0.5) ? 1 : 0;
    }
    g.sensitive[i] = s;
    g.labels[i] = y;
  }

  g.features = Matrix(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    const double ys = 2.0 * g.labels[i] - 1.0;
    const double ss = 2.0 * g.sensitive[i] - 1.0;
    for (std::size_t c = 0; c < f; ++c) {
      g.features(i, c) = spec.class_separation * ys * class_dir[c] +
                         spec.sensitive_leakage * ss * leak_dir[c] + spec.noise_std * rng.normal();
    }
  }

  const double cross_label = 1.0 - spec.label_homophily;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      double p = g.sensitive[i] == g.sensitive[j] ? spec.p_intra : spec.p_inter;
      if (g.labels[i] != g.labels[j]) p *= cross_label;
      if (rng.uniform() < p) g.edges.emplace_back(i, j);
    }
  }
  g.validate();
  return g;
}

double sensitive_homophily_ratio(const Graph& g) {
  double n1 = 0.0;
  for (int s : g.sensitive) n1 += s;
  const double n0 = static_cast<double>(g.num_nodes()) - n1;
  const double intra_pairs = n0 * (n0 - 1.0) / 2.0 + n1 * (n1 - 1.0) / 2.0;
  const double inter_pairs = n0 * n1;
  double intra = 0.0, inter = 0.0;
  for (const auto& [u, v] : g.edges) (g.sensitive[u] == g.sensitive[v] ? intra : inter) += 1.0;
  if (intra_pairs <= 0.0 || inter_pairs <= 0.0 || inter == 0.0) {
    throw UndefinedMetricError("homophily ratio undefined: a pair class or cross-group edge set is empty");
  }
  return (intra / intra_pairs) / (inter / inter_pairs);
}

}  // namespace fairdtd
