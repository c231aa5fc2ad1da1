#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "fairdtd/matrix.hpp"

namespace fairdtd::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive and has not been reset.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Convenience for 1x1 results.
  double scalar() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records matrix operations in execution order and replays them in reverse
/// to accumulate gradients. One tape serves one forward/backward pass;
/// reset() clears it for the next pass.
class Tape {
 public:
  /// Called during backward with the gradient flowing into the node's output.
  /// Implementations push gradients to their inputs via accumulate().
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var param(Matrix value);
  /// Leaf that never receives a gradient.
  Var constant(Matrix value);

  /// Adds an operation result. If none of the inputs tracks gradients the
  /// result is stored as a constant and `fn` is dropped. Throws DomainError
  /// when `value` contains NaN or Inf.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward fn, const char* op);

  /// Reverse sweep from a 1x1 loss. Gradients from earlier sweeps are
  /// cleared first.
  void backward(Var loss);

  /// Gradient of the last backward() with respect to `v`; zeros when `v` was
  /// not reached or does not track gradients.
  Matrix grad(Var v) const;

  bool requires_grad(Var v) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  void accumulate(std::size_t id, const Matrix& g);

  void reset();
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Throws TapeError unless `v` belongs to this tape.
  void check_owned(Var v) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
    bool has_grad = false;
    const char* op = "leaf";
  };

  Var push(Node node);

  std::deque<Node> nodes_;
};

}  // namespace fairdtd::ad
