#include "fairdtd/models.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <utility>

#include "fairdtd/error.hpp"
#include "fairdtd/graph.hpp"
#include "fairdtd/ops.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd {

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Mlp: return "mlp";
    case EncoderKind::Gcn: return "gcn";
    case EncoderKind::Gin: return "gin";
  }
  return "unknown";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mlp") return EncoderKind::Mlp;
  if (lower == "gcn") return EncoderKind::Gcn;
  if (lower == "gin") return EncoderKind::Gin;
  throw ConfigError("unknown encoder kind '" + std::string(name) + "' (expected mlp, gcn or gin)");
}

bool ModelParams::all_finite() const {
  return w1.all_finite() && b1.all_finite() && w2.all_finite() && b2.all_finite();
}

ModelParams init_params(EncoderKind kind, std::size_t in_dim, std::size_t hidden,
                        std::size_t out_dim, std::uint64_t seed) {
  if (in_dim == 0 || hidden == 0 || out_dim == 0) {
    throw ConfigError("encoder dimensions must be >= 1");
  }
  Rng rng(seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    return w;
  };
  ModelParams p;
  p.kind = kind;
  p.in_dim = in_dim;
  p.hidden = hidden;
  p.out_dim = out_dim;
  p.w1 = glorot(in_dim, hidden);
  p.b1 = Matrix(1, hidden);
  p.w2 = glorot(hidden, out_dim);
  p.b2 = Matrix(1, out_dim);
  return p;
}

GraphOperators make_operators(const Graph& g) {
  return {normalize_adjacency(g), plain_adjacency(g)};
}

BoundParams bind(ad::Tape& tape, const ModelParams& params, bool trainable) {
  auto leaf = [&](const Matrix& m) { return trainable ? tape.param(m) : tape.constant(m); };
  return {leaf(params.w1), leaf(params.b1), leaf(params.w2), leaf(params.b2), params.gin_eps1,
          params.gin_eps2};
}

namespace {
void check_input(const BoundParams& p, ad::Var x) {
  if (x.cols() != p.w1.rows()) {
    throw DimensionError("encoder expects " + std::to_string(p.w1.rows()) + " input columns, got " +
                         x.value().shape_string());
  }
}
}  // namespace

ForwardOutput forward_feature_teacher(const BoundParams& p, ad::Var x) {
  check_input(p, x);
  ad::Var r = ad::relu(ad::add_row(ad::matmul(x, p.w1), p.b1));
  ad::Var z = ad::add_row(ad::matmul(r, p.w2), p.b2);
  return {z, r};
}

ForwardOutput forward_structure_teacher(const BoundParams& p, const SparseAdjacency& a_hat,
                                        ad::Var ones) {
  check_input(p, ones);
  if (a_hat.dim() != ones.rows()) {
    throw DimensionError("adjacency of dimension " + std::to_string(a_hat.dim()) + " vs input " +
                         ones.value().shape_string());
  }
  ad::Var r = ad::relu(ad::add_row(ad::spmm(a_hat, ad::matmul(ones, p.w1)), p.b1));
  ad::Var z = ad::add_row(ad::spmm(a_hat, ad::matmul(r, p.w2)), p.b2);
  return {z, r};
}

ForwardOutput forward_student(const BoundParams& p, const GraphOperators& ops, ad::Var x,
                              EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Gcn:
      return forward_structure_teacher(p, ops.normalized, x);
    case EncoderKind::Gin: {
      check_input(p, x);
      if (ops.adjacency.dim() != x.rows()) {
        throw DimensionError("GIN adjacency of dimension " + std::to_string(ops.adjacency.dim()) +
                             " vs input " + x.value().shape_string());
      }
      auto aggregate = [&ops](ad::Var h, double eps) {
        return ad::add(ad::spmm(ops.adjacency, h), ad::scale(h, 1.0 + eps));
      };
      ad::Var r = ad::relu(ad::add_row(ad::matmul(aggregate(x, p.gin_eps1), p.w1), p.b1));
      ad::Var z = ad::add_row(ad::matmul(aggregate(r, p.gin_eps2), p.w2), p.b2);
      return {z, r};
    }
    case EncoderKind::Mlp:
      break;
  }
  throw ConfigError("student encoder must be gcn or gin");
}

ForwardOutput forward_any(const BoundParams& p, EncoderKind kind, const GraphOperators& ops,
                          ad::Var x) {
  if (kind == EncoderKind::Mlp) return forward_feature_teacher(p, x);
  return forward_student(p, ops, x, kind);
}

ForwardValues evaluate(const ModelParams& params, const GraphOperators& ops, const Matrix& x) {
  ad::Tape tape;
  const BoundParams bp = bind(tape, params, false);
  const ForwardOutput out = forward_any(bp, params.kind, ops, tape.constant(x));
  return {out.logits.value(), out.hidden.value()};
}

// --- checkpoints ------------------------------------------------------------

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

void put_le(std::ofstream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const ModelParams& params,
                     const CheckpointMeta& meta, const KeyValue& extra) {
  KeyValue kv;
  kv.set("format", "fairdtd-checkpoint-v1");
  kv.set("role", meta.role);
  kv.set("kind", std::string(to_string(params.kind)));
  kv.set("in_dim", params.in_dim);
  kv.set("hidden", params.hidden);
  kv.set("out_dim", params.out_dim);
  kv.set("gin_eps1", params.gin_eps1);
  kv.set("gin_eps2", params.gin_eps2);
  kv.set("seed", static_cast<unsigned long long>(meta.seed));
  kv.set("epoch", meta.epoch);
  kv.set("dtype", "float64-le");
  kv.set("tensors", "w1:" + params.w1.shape_string() + ",b1:" + params.b1.shape_string() +
                        ",w2:" + params.w2.shape_string() + ",b2:" + params.b2.shape_string());
  for (const auto& [k, v] : extra.entries()) kv.set(k, v);
  kv.write(with_suffix(stem, ".manifest"));

  const auto bin = with_suffix(stem, ".bin");
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + bin.string());
  for (const Matrix* m : params.tensors())
    for (double v : m->values()) put_le(out, v);
  if (!out) throw IoError("write failed for " + bin.string());
}

ModelParams load_checkpoint(const std::filesystem::path& stem, KeyValue* manifest_out) {
  const KeyValue kv = KeyValue::read(with_suffix(stem, ".manifest"));
  if (kv.require("format") != "fairdtd-checkpoint-v1") {
    throw SchemaError("unsupported checkpoint format '" + kv.require("format") + "'");
  }
  ModelParams p;
  p.kind = parse_encoder_kind(kv.require("kind"));
  p.in_dim = static_cast<std::size_t>(kv.require_int("in_dim"));
  p.hidden = static_cast<std::size_t>(kv.require_int("hidden"));
  p.out_dim = static_cast<std::size_t>(kv.require_int("out_dim"));
  p.gin_eps1 = kv.require_double("gin_eps1");
  p.gin_eps2 = kv.require_double("gin_eps2");
  p.w1 = Matrix(p.in_dim, p.hidden);
  p.b1 = Matrix(1, p.hidden);
  p.w2 = Matrix(p.hidden, p.out_dim);
  p.b2 = Matrix(1, p.out_dim);

  const auto bin = with_suffix(stem, ".bin");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("cannot read " + bin.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t expected = 0;
  for (const Matrix* m : std::as_const(p).tensors()) expected += m->size() * 8;
  if (bytes.size() != expected) {
    throw CompatibilityError("checkpoint blob has " + std::to_string(bytes.size()) +
                             " bytes, manifest implies " + std::to_string(expected));
  }
  std::size_t off = 0;
  for (Matrix* m : p.tensors()) {
    for (double& v : m->values()) {
      v = get_le(bytes.data() + off);
      off += 8;
    }
  }
  if (manifest_out) *manifest_out = kv;
  return p;
}

}  // namespace fairdtd
