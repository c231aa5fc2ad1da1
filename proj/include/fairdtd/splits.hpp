#pragma once

#include <cstdint>

#include "fairdtd/graph.hpp"

namespace fairdtd {

struct SplitFractions {
  double train = 0.5;
  double val = 0.25;
  double test = 0.25;
};

/// Stratified random split of the labeled nodes.
///
/// Split sizes are round(fraction * labeled) overall, apportioned across the
/// four (label, sensitive) cells by largest remainder. A cell with at least
/// three members always contributes at least one training node.
/// Throws ConfigError for non-positive fractions or a sum above 1.
Splits make_splits(const Graph& g, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace fairdtd
