#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "mode/matrix.hpp"

namespace mode {

// Handle to a node on a Tape. Cheap to copy; only meaningful together with
// the tape that created it.
class Var {
 public:
  Var() = default;
  std::size_t index() const { return index_; }

 private:
  friend class Tape;
  explicit Var(std::size_t i) : index_(i) {}
  std::size_t index_ = std::numeric_limits<std::size_t>::max();
};

// Reverse-mode computation graph over dense matrices. Nodes are appended in
// evaluation order, so reverse creation order is a reverse topological order
// and backward() visits each node exactly once. A tape is confined to one
// thread; values are computed eagerly by the same kernels as the plain
// Matrix functions.
class Tape {
 public:
  // Trainable leaf: participates in backward.
  Var leaf(Matrix value);
  // Frozen input: no gradient is accumulated (used for x, targets, W0).
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double c);
  Var scale_rows(Var u, Var w);
  Var slice_cols(Var a, std::size_t c0, std::size_t c1);
  Var softmax_rows(Var a);
  Var outer(Var u, Var v);  // u: n x 1, v: m x 1 column vectors
  Var sum(Var a);           // 1x1

  const Matrix& value(Var v) const { return node(v).value; }
  // Gradient accumulated by backward(); zeros if backward never reached v.
  const Matrix& grad(Var v);

  // Accumulates d(output)/d(node) into every reachable node's grad.
  // output must be 1x1.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class OpKind : std::uint8_t {
    leaf,
    constant,
    matmul,
    transpose,
    add,
    sub,
    hadamard,
    scale,
    scale_rows,
    slice_cols,
    softmax_rows,
    outer,
    sum,
  };

  struct Node {
    OpKind op;
    std::size_t a = std::numeric_limits<std::size_t>::max();
    std::size_t b = std::numeric_limits<std::size_t>::max();
    double factor = 0.0;               // scale
    std::size_t c0 = 0, c1 = 0;        // slice_cols bounds
    Matrix value;
    Matrix grad;                       // empty until needed
    bool needs_grad = false;
  };

  Node& node(Var v) {
    assert(v.index() < nodes_.size());
    return nodes_[v.index()];
  }
  const Node& node(Var v) const {
    assert(v.index() < nodes_.size());
    return nodes_[v.index()];
  }

  Var push(Node n);
  void accumulate(std::size_t target, const Matrix& contribution);

  std::vector<Node> nodes_;
};

// Central-difference gradient oracle: for each parameter entry, perturbs by
// +/- h and differences f. f must be a deterministic pure function of the
// parameter list.
using ScalarFn = std::function<double(const std::vector<Matrix>&)>;
std::vector<Matrix> finite_diff_grad(const ScalarFn& f, std::vector<Matrix> params, double h);

}  // namespace mode
