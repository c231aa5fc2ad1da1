#include "fairdtd/adam.hpp"

#include <cmath>

#include "fairdtd/error.hpp"

namespace fairdtd {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
               AdamState& state, const AdamOptions& opts) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty() && state.v.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: state holds " + std::to_string(state.m.size()) +
                         " entries for " + std::to_string(params.size()) + " params");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(grads[k]) || !params[k]->same_shape(state.m[k]) ||
        !params[k]->same_shape(state.v[k])) {
      throw DimensionError("adam_step: shape mismatch at parameter " + std::to_string(k) + " (" +
                           params[k]->shape_string() + " vs grad " + grads[k].shape_string() + ")");
    }
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->values();
    auto g = grads[k].values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
    }
  }
}

}  // namespace fairdtd
