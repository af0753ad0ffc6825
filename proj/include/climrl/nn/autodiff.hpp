#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "climrl/nn/tensor.hpp"

namespace climrl::nn {

// A trainable tensor together with its gradient accumulator.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape is.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient of the last backward() output with respect to this node.
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records a computation graph for reverse-mode differentiation.
//
// A tape supports exactly one backward pass; calling backward() again throws,
// and a fresh forward pass on a new tape is required.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf with no gradient.
  Var constant(Tensor value);
  // Leaf referencing external storage, no gradient. `value` must outlive the tape.
  Var frozen(const Tensor& value);
  // Differentiable leaf; its gradient is readable through Var::grad().
  Var input(Tensor value);
  // Leaf bound to a parameter; backward() adds into `p.grad`.
  Var parameter(Parameter& p);

  void backward(Var output);
  void backward(Var output, const Tensor& output_grad);
  bool consumed() const { return consumed_; }

  const Tensor& value(std::size_t id) const;
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Op construction interface.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn);
  // Gradient buffer of node `id`, allocated on demand; nullptr when the node
  // does not require a gradient.
  Tensor* grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

// ---- differentiable operations -------------------------------------------
//
// Binary elementwise ops broadcast either operand along a dimension of size 1
// (1 x n rows, m x 1 columns, 1 x 1 scalars).

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);
Var maximum(Var a, Var b);

Var scale(Var x, double factor);
Var shift(Var x, double offset);
Var neg(Var x);
Var tanh(Var x);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
Var softplus(Var x);
// Gradient passes only where lo <= x <= hi.
Var clamp(Var x, double lo, double hi);

Var sum(Var x);        // -> 1 x 1
Var mean(Var x);       // -> 1 x 1
Var sum_cols(Var x);   // m x n -> m x 1
Var mean_cols(Var x);  // m x n -> m x 1
Var concat_cols(Var a, Var b);
Var slice_cols(Var x, std::size_t begin, std::size_t end);

// Quantile Huber loss of predicted quantiles `pred` (B x Nq) against target
// atoms `target` (B x M, treated as constant), averaged over all B*Nq*M pairs:
//   rho(u) = |tau_k - 1{u < 0}| * H_kappa(u),  u = target_j - pred_k,
//   H_kappa(u) = u^2/2 if |u| <= kappa else kappa*(|u| - kappa/2).
Var quantile_huber_loss(Var pred, const Tensor& target, std::span<const double> taus,
                        double kappa);

// Quantile fractions tau_k = (2k - 1) / (2 n), k = 1..n.
std::vector<double> quantile_fractions(std::size_t n);

}  // namespace climrl::nn
