#include "fairdtd/autodiff.hpp"

#include <string>

#include "fairdtd/error.hpp"

namespace fairdtd::ad {

const Matrix& Var::value() const {
  if (!tape_) throw TapeError("use of an unbound Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw DimensionError("scalar() on a " + v.shape_string() + " value");
  }
  return v(0, 0);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Matrix value) {
  if (!value.all_finite()) throw DomainError("non-finite parameter value");
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  if (!value.all_finite()) throw DomainError("non-finite constant value");
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw TapeError("Var does not belong to this tape");
  }
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward fn, const char* op) {
  bool tracks = false;
  for (const Var& in : inputs) {
    check_owned(in);
    tracks = tracks || nodes_[in.id()].requires_grad;
  }
  if (!value.all_finite()) {
    throw DomainError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = tracks;
  n.op = op;
  if (tracks) n.backward = std::move(fn);
  return push(std::move(n));
}

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  if (!n.grad.same_shape(g)) {
    throw DimensionError(std::string("gradient shape mismatch at ") + n.op);
  }
  auto dst = n.grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  check_owned(loss);
  const Node& out = nodes_[loss.id()];
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw TapeError("backward() needs a 1x1 loss, got " + out.value.shape_string());
  }
  for (auto& n : nodes_) {
    n.grad = Matrix();
    n.has_grad = false;
  }
  if (!out.requires_grad) return;
  accumulate(loss.id(), Matrix(1, 1, 1.0));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id()];
  if (!n.has_grad) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::reset() { nodes_.clear(); }

}  // namespace fairdtd::ad
