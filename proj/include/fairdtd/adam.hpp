#pragma once

#include <span>
#include <vector>

#include "fairdtd/matrix.hpp"

namespace fairdtd {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter matrix.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// In-place Adam update with bias correction. A fresh (empty) state is
/// sized on first use.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
               AdamState& state, const AdamOptions& opts);

}  // namespace fairdtd
