#pragma once

// Minimal reverse-mode differentiation over DenseTensor values.
//
// Every op appends a node holding its value and a closure that pushes the
// node's gradient onto its parents. backward() walks the tape once in
// reverse, so an op must only reference nodes recorded before it.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "net3/tensor.hpp"
#include "net3/tgcn.hpp"

namespace net3::ad {

struct Var {
  std::size_t id;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const DenseTensor& grad)>;

  /// Differentiable leaf.
  Var variable(DenseTensor value);
  Var variable(const Matrix& value) { return variable(DenseTensor::from_matrix(value)); }
  /// Non-differentiable leaf.
  Var constant(DenseTensor value);
  Var constant(const Matrix& value) { return constant(DenseTensor::from_matrix(value)); }

  Var record(DenseTensor value, std::span<const Var> parents, Backward backward);

  const DenseTensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient after backward(); zeros if the node received none.
  DenseTensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Add `g` into v's gradient accumulator (no-op for constants).
  void accumulate(Var v, const DenseTensor& g);

  /// Seeds the scalar `root` with 1 and propagates to every node before it.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    DenseTensor value;
    DenseTensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var sigmoid(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var activation(Tape& t, Var a, Activation act);

/// x ×_mode u, differentiable in both operands.
Var mode_product(Tape& t, Var x, Var u, std::size_t mode);
/// Order-2 transpose.
Var transpose(Tape& t, Var a);
/// Order-2 matrix product.
Var matmul(Tape& t, Var a, Var b);
/// x + b with b (1 × d or length d) broadcast along the last mode.
Var add_feature_bias(Tape& t, Var x, Var b);
Var concat_last(Tape& t, Var a, Var b);
Var reshape(Tape& t, Var a, Shape shape);
/// out[i] = a[index[i]]
Var gather(Tape& t, Var a, std::vector<std::size_t> index, Shape shape);
/// Σ w ⊙ a ⊙ a with constant weights w (same shape as a).
Var weighted_sum_squares(Tape& t, Var a, const DenseTensor& weights);
Var sum_squares(Tape& t, Var a);
/// Row-wise linear maps: x (P × d), w (P × d·d') → (P × d'), out[i,j] = Σ_k x[i,k] w[i, k·d' + j].
Var nodewise_linear(Tape& t, Var x, Var w);

}  // namespace net3::ad
