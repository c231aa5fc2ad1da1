#include "fairdtd/splits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fairdtd/error.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd {

namespace {

constexpr std::size_t kCells = 4;
using Counts = std::array<std::size_t, kCells>;

// Largest-remainder apportionment of `total` by `quota`, honouring `cap`.
Counts apportion(std::size_t total, const std::array<double, kCells>& quota, const Counts& cap) {
  Counts out{};
  std::size_t used = 0;
  for (std::size_t c = 0; c < kCells; ++c) {
    out[c] = std::min(static_cast<std::size_t>(std::floor(quota[c])), cap[c]);
    used += out[c];
  }
  std::array<std::size_t, kCells> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
  });
  while (used < total) {
    bool progressed = false;
    for (std::size_t c : order) {
      if (used == total) break;
      if (out[c] < cap[c]) {
        ++out[c];
        ++used;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

}  // namespace

Splits make_splits(const Graph& g, const SplitFractions& f, std::uint64_t seed) {
  if (!(f.train > 0.0) || !(f.val > 0.0) || !(f.test > 0.0)) {
    throw ConfigError("split fractions must all be positive");
  }
  if (f.train + f.val + f.test > 1.0 + 1e-12) {
    throw ConfigError("split fractions sum to more than 1");
  }
  const std::size_t n = g.num_nodes();
  std::array<std::vector<std::uint32_t>, kCells> cells;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (g.labels[i] == kUnlabeled) continue;
    cells[static_cast<std::size_t>(g.labels[i] * 2 + g.sensitive[i])].push_back(i);
  }
  Rng rng(seed);
  for (auto& cell : cells) {
    for (std::size_t i = cell.size(); i > 1; --i) {
      std::swap(cell[i - 1], cell[rng.below(i)]);
    }
  }

  Counts size{};
  std::size_t labeled = 0;
  for (std::size_t c = 0; c < kCells; ++c) {
    size[c] = cells[c].size();
    labeled += size[c];
  }
  auto target = [&](double frac) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(labeled) + 0.5));
  };
  const std::size_t n_train = std::min(target(f.train), labeled);
  const std::size_t n_val = std::min(target(f.val), labeled - n_train);
  const std::size_t n_test = std::min(target(f.test), labeled - n_train - n_val);

  auto quotas = [&](double frac) {
    std::array<double, kCells> q{};
    for (std::size_t c = 0; c < kCells; ++c) q[c] = frac * static_cast<double>(size[c]);
    return q;
  };

  Counts train = apportion(n_train, quotas(f.train), size);
  for (std::size_t c = 0; c < kCells; ++c) {
    if (size[c] >= 3 && train[c] == 0 && n_train > 0) {
      const auto donor = static_cast<std::size_t>(std::max_element(train.begin(), train.end()) - train.begin());
      if (train[donor] > 1) {
        --train[donor];
        ++train[c];
      }
    }
  }
  Counts rest{};
  for (std::size_t c = 0; c < kCells; ++c) rest[c] = size[c] - train[c];
  const Counts val = apportion(n_val, quotas(f.val), rest);
  for (std::size_t c = 0; c < kCells; ++c) rest[c] -= val[c];
  const Counts test = apportion(n_test, quotas(f.test), rest);

  Splits sp{Mask(n, 0), Mask(n, 0), Mask(n, 0)};
  for (std::size_t c = 0; c < kCells; ++c) {
    std::size_t k = 0;
    for (; k < train[c]; ++k) sp.train[cells[c][k]] = 1;
    for (std::size_t e = k + val[c]; k < e; ++k) sp.val[cells[c][k]] = 1;
    for (std::size_t e = k + test[c]; k < e; ++k) sp.test[cells[c][k]] = 1;
  }
  return sp;
}

}  // namespace fairdtd
