#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "parkcast/tensor.hpp"

namespace parkcast::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid until the owning
/// tape is reset.
struct Var {
  Tape *tape = nullptr;
  std::uint32_t id = 0;
  const Tensor &value() const;
};

/// Reverse-mode computation tape. Nodes are recorded in topological
/// order; backward() sweeps them exactly once in reverse. Node slots and
/// their buffers are reused across reset() calls, so a tape that replays
/// the same op sequence allocates only on its first pass.
class Tape {
public:
  enum class Op : std::uint8_t {
    Leaf,
    MatMul,
    Add,
    AddRow,
    Hadamard,
    Affine,
    Sigmoid,
    Tanh,
    Relu,
    ConcatCols,
    Mse,
  };

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// Copies `t` onto the tape; differentiability follows t.requires_grad.
  Var leaf(const Tensor &t) { return leaf(t, t.requires_grad); }
  Var leaf(const Tensor &t, bool requires_grad);

  Var matmul(Var a, Var b);
  /// Same-shape elementwise sum, or row broadcast when `b` is rank-1 and
  /// `a` is a matrix whose column count matches.
  Var add(Var a, Var b);
  Var hadamard(Var a, Var b);
  /// Elementwise mul * x + add.
  Var affine(Var a, double mul, double add);
  Var scale(Var a, double c) { return affine(a, c, 0.0); }
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var concat_cols(Var a, Var b);
  /// Mean squared error over all elements; scalar output.
  Var mse(Var pred, Var target);

  const Tensor &value(Var v) const;
  std::size_t size() const { return used_; }

  /// Forgets all nodes but keeps slot storage for reuse.
  void reset() { used_ = 0; }

  /// Read-only view of the gradients produced by the latest backward().
  /// Valid until the next backward() or reset().
  class GradView {
  public:
    bool has(Var v) const;
    /// Null when no gradient reached the node.
    const Tensor *find(Var v) const;
    /// Gradient tensor; zeros of the node's shape when unreached.
    Tensor get(Var v) const;

  private:
    friend class Tape;
    explicit GradView(const Tape *t) : tape_(t) {}
    const Tape *tape_;
  };

  /// Reverse sweep from a scalar loss node. Gradients accumulate (sum)
  /// for operands used more than once.
  GradView backward(Var loss);

private:
  struct Node {
    Op op = Op::Leaf;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double s0 = 0.0;
    double s1 = 0.0;
    bool has_b = false;
    bool needs_grad = false;
    Tensor val;
  };

  Node &acquire();
  Var make_var(std::uint32_t id) { return Var{this, id}; }
  const Node &node(Var v) const;
  void check_owned(Var v, const char *op) const;
  Tensor &grad_slot(std::uint32_t id, const Shape &shape);
  void backward_node(std::uint32_t id);

  std::vector<Node> nodes_;
  std::size_t used_ = 0;
  std::vector<Tensor> grads_;
  std::vector<std::uint8_t> grad_live_;
};

/// Builds a scalar-valued computation from a single input leaf.
using TapeFn = std::function<Var(Tape &, Var)>;

/// Compares the analytic gradient of `f` at `x` against central finite
/// differences with the given step. Returns
///   max_i |analytic_i - numeric_i| / max(1, |analytic_i|).
double finite_difference_check(const TapeFn &f, const Tensor &x, double step);

} // namespace parkcast::ad
