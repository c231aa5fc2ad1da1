#pragma once

#include <cstdint>
#include <span>

#include "fairdtd/autodiff.hpp"
#include "fairdtd/sparse.hpp"

namespace fairdtd::ad {

inline constexpr double kProbFloor = 1e-12;
inline constexpr double kNormFloor = 1e-12;

Var matmul(Var a, Var b);
/// adj * x. `adj` must outlive the tape's backward pass.
Var spmm(const SparseAdjacency& adj, Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a (N x C) + bias (1 x C) broadcast over rows.
Var add_row(Var a, Var bias);
Var square(Var a);
Var relu(Var a);
Var sigmoid(Var a);

/// Gradient stop: a constant copy of `a`.
Var detach(Var a);

/// a (N x C) with row i divided by t(i, 0).
Var div_rows(Var a, Var t);

Var softmax_rows(Var z);
/// softmax(z_i / temps_i) per row. Throws DomainError for temps <= 0.
Var softmax_rows(Var z, Var temps);
Var softmax_rows(Var z, double temp);

/// mean_i sum_c p_ic ln(p_ic / q_ic), with 0 ln 0 := 0 and q clamped at
/// kProbFloor. Rows of both arguments must be probability distributions.
Var kl_div_rows(Var p, Var q);

/// Mean softmax cross-entropy over rows with mask != 0.
Var cross_entropy_masked(Var logits, std::span<const int> labels,
                         std::span<const std::uint8_t> mask);

/// Each row divided by max(||row||_2, kNormFloor).
Var l2_normalize_rows(Var r);

Var sum(Var a);
Var mean(Var a);

}  // namespace fairdtd::ad
