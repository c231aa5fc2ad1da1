#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fairdtd/autodiff.hpp"
#include "fairdtd/keyvalue.hpp"
#include "fairdtd/matrix.hpp"
#include "fairdtd/sparse.hpp"

namespace fairdtd {

enum class EncoderKind { Mlp, Gcn, Gin };

std::string_view to_string(EncoderKind kind);
/// Accepts "mlp", "gcn", "gin" (case-insensitive). Throws ConfigError.
EncoderKind parse_encoder_kind(std::string_view name);

inline constexpr std::size_t kDefaultHidden = 64;
inline constexpr std::size_t kNumClasses = 2;

/// Two-layer encoder weights. Tensor order (for optimizers and checkpoints)
/// is w1 (F x H), b1 (1 x H), w2 (H x C), b2 (1 x C). GIN keeps a fixed
/// self-weight epsilon per layer; it is not trained.
struct ModelParams {
  EncoderKind kind = EncoderKind::Gcn;
  std::size_t in_dim = 0;
  std::size_t hidden = kDefaultHidden;
  std::size_t out_dim = kNumClasses;
  Matrix w1, b1, w2, b2;
  double gin_eps1 = 0.0;
  double gin_eps2 = 0.0;

  std::vector<Matrix*> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::vector<const Matrix*> tensors() const { return {&w1, &b1, &w2, &b2}; }
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases,
/// epsilon 0. Deterministic in `seed`.
ModelParams init_params(EncoderKind kind, std::size_t in_dim, std::size_t hidden,
                        std::size_t out_dim, std::uint64_t seed);

/// Parameters placed on a tape, in ModelParams tensor order.
struct BoundParams {
  ad::Var w1, b1, w2, b2;
  double gin_eps1 = 0.0;
  double gin_eps2 = 0.0;
  std::vector<ad::Var> vars() const { return {w1, b1, w2, b2}; }
};

/// Leaves are gradient-tracking when `trainable`, constants otherwise.
BoundParams bind(ad::Tape& tape, const ModelParams& params, bool trainable);

/// Final logits Z (N x C) and first-layer post-activation R (N x H).
struct ForwardOutput {
  ad::Var logits;
  ad::Var hidden;
};

/// Propagation operators of one graph.
struct GraphOperators {
  SparseAdjacency normalized;  // GCN: D^-1/2 (A + I) D^-1/2
  SparseAdjacency adjacency;   // GIN: plain A without self-loops
};

struct Graph;
GraphOperators make_operators(const Graph& g);

/// R = ReLU(X W1 + b1); Z = R W2 + b2.
ForwardOutput forward_feature_teacher(const BoundParams& p, ad::Var x);
/// Two-layer GCN over the normalized adjacency and the all-ones input.
ForwardOutput forward_structure_teacher(const BoundParams& p, const SparseAdjacency& a_hat,
                                        ad::Var ones);
/// GCN: R = ReLU(Â X W1 + b1); Z = Â R W2 + b2.
/// GIN: R = ReLU((A X + (1+eps1) X) W1 + b1); Z = (A R + (1+eps2) R) W2 + b2.
ForwardOutput forward_student(const BoundParams& p, const GraphOperators& ops, ad::Var x,
                              EncoderKind kind);

/// Dispatches on `params.kind` (MLP ignores the operators).
ForwardOutput forward_any(const BoundParams& p, EncoderKind kind, const GraphOperators& ops,
                          ad::Var x);

/// Value-only forward on a scratch tape.
struct ForwardValues {
  Matrix logits;
  Matrix hidden;
};
ForwardValues evaluate(const ModelParams& params, const GraphOperators& ops, const Matrix& x);

/// Checkpoint: `<stem>.manifest` (key = value) next to `<stem>.bin`
/// (little-endian float64 tensors in declared order).
struct CheckpointMeta {
  std::string role;
  std::uint64_t seed = 0;
  long long epoch = 0;
};

void save_checkpoint(const std::filesystem::path& stem, const ModelParams& params,
                     const CheckpointMeta& meta, const KeyValue& extra = {});
ModelParams load_checkpoint(const std::filesystem::path& stem, KeyValue* manifest_out = nullptr);

}  // namespace fairdtd
