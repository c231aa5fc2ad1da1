#include "fairdtd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "fairdtd/error.hpp"

namespace fairdtd {

std::size_t count(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

void Graph::validate() const {
  const std::size_t n = num_nodes();
  if (labels.size() != n || node_ids.size() != n || features.rows() != n) {
    throw DimensionError("graph arrays disagree on node count: sensitive " + std::to_string(n) +
                         ", labels " + std::to_string(labels.size()) + ", ids " +
                         std::to_string(node_ids.size()) + ", features " +
                         features.shape_string());
  }
  if (n > 0 && features.cols() < 1) throw SchemaError("graph needs at least one feature column");
  for (std::size_t i = 0; i < n; ++i) {
    if (sensitive[i] != 0 && sensitive[i] != 1)
      throw DomainError("sensitive attribute must be 0/1 at node " + std::to_string(i));
    if (labels[i] != 0 && labels[i] != 1 && labels[i] != kUnlabeled)
      throw DomainError("label must be 0/1 or -1 at node " + std::to_string(i));
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [u, v] = edges[k];
    if (u >= n || v >= n) throw ReferentialError("edge endpoint out of range");
    if (u == v) throw DomainError("self-loop in edge list at node " + std::to_string(u));
    if (u > v) throw DomainError("edge list is not canonical (u < v)");
    if (k > 0 && edges[k - 1] >= edges[k]) throw DomainError("edge list not sorted/unique");
  }
  const Mask* masks[] = {&splits.train, &splits.val, &splits.test};
  for (const Mask* m : masks) {
    if (!m->empty() && m->size() != n) throw DimensionError("split mask length differs from N");
  }
  for (std::size_t i = 0; i < n; ++i) {
    int owners = 0;
    for (const Mask* m : masks) owners += (!m->empty() && (*m)[i]) ? 1 : 0;
    if (owners > 1) throw DomainError("split masks overlap at node " + std::to_string(i));
    if (owners == 1 && labels[i] == kUnlabeled)
      throw DomainError("unlabeled node " + std::to_string(i) + " assigned to a split");
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> canonical_edges(
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SparseAdjacency normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> degree(n, 1.0);
  for (const auto& [u, v] : g.edges) {
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets;
  triplets.reserve(n + 2 * g.edges.size());
  for (std::uint32_t i = 0; i < n; ++i) triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
  for (const auto& [u, v] : g.edges) {
    const double w = inv_sqrt[u] * inv_sqrt[v];
    triplets.emplace_back(u, v, w);
    triplets.emplace_back(v, u, w);
  }
  return SparseAdjacency::from_triplets(n, std::move(triplets));
}

SparseAdjacency plain_adjacency(const Graph& g) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets;
  triplets.reserve(2 * g.edges.size());
  for (const auto& [u, v] : g.edges) {
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  return SparseAdjacency::from_triplets(g.num_nodes(), std::move(triplets));
}

Matrix all_ones_features(const Graph& g) {
  if (g.num_nodes() == 0) throw EmptySelectionError("all_ones_features: graph has no nodes");
  return Matrix(g.num_nodes(), g.num_features(), 1.0);
}

Matrix standardize_features(const Matrix& x, const Mask& fit_mask) {
  if (fit_mask.size() != x.rows()) throw DimensionError("standardize: mask length differs from rows");
  const std::size_t m = count(fit_mask);
  if (m == 0) throw EmptySelectionError("standardize: empty fit mask");
  std::vector<double> mu(x.cols(), 0.0), sd(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (fit_mask[i])
      for (std::size_t c = 0; c < x.cols(); ++c) mu[c] += x(i, c);
  for (double& v : mu) v /= static_cast<double>(m);
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (fit_mask[i])
      for (std::size_t c = 0; c < x.cols(); ++c) sd[c] += (x(i, c) - mu[c]) * (x(i, c) - mu[c]);
  for (double& v : sd) {
    v = std::sqrt(v / static_cast<double>(m));
    if (v < 1e-12) v = 1.0;
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) out(i, c) = (x(i, c) - mu[c]) / sd[c];
  return out;
}

}  // namespace fairdtd
