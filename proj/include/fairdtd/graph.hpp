#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fairdtd/matrix.hpp"
#include "fairdtd/sparse.hpp"

namespace fairdtd {

using Mask = std::vector<std::uint8_t>;

inline constexpr int kUnlabeled = -1;

struct Splits {
  Mask train;
  Mask val;
  Mask test;

  friend bool operator==(const Splits&, const Splits&) = default;
};

std::size_t count(const Mask& m);

/// Undirected attributed graph with a binary sensitive attribute.
///
/// Edges are stored once per pair as (u, v) with u < v, sorted and unique.
/// `node_ids` keeps the external identifiers from the node file (0..N-1 for
/// generated graphs). Labels are 0/1, or kUnlabeled.
struct Graph {
  std::vector<std::int64_t> node_ids;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  Matrix features;
  std::vector<int> sensitive;
  std::vector<int> labels;
  Splits splits;

  std::size_t num_nodes() const noexcept { return sensitive.size(); }
  std::size_t num_features() const noexcept { return features.cols(); }
  std::size_t num_edges() const noexcept { return edges.size(); }

  /// Throws on any violated invariant: sizes, self-loops, duplicate or
  /// non-canonical edges, S/Y domains, F >= 1, overlapping masks.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Sorts (u, v) pairs into canonical u < v form, dropping self-loops and
/// duplicates (in either orientation).
std::vector<std::pair<std::uint32_t, std::uint32_t>> canonical_edges(
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);

/// D^{-1/2} (A + I) D^{-1/2}, degrees counted after adding the self-loop.
SparseAdjacency normalize_adjacency(const Graph& g);

/// Binary symmetric A without self-loops.
SparseAdjacency plain_adjacency(const Graph& g);

/// N x F matrix of ones for the structure-only model.
Matrix all_ones_features(const Graph& g);

/// Per-feature z-score using statistics of the rows selected by `fit_mask`.
/// Columns with zero spread are only centered.
Matrix standardize_features(const Matrix& x, const Mask& fit_mask);

}  // namespace fairdtd
