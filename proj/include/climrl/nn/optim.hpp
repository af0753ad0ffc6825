#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "climrl/nn/autodiff.hpp"
#include "climrl/nn/mlp.hpp"

namespace climrl::nn {

enum class OptimizerKind { sgd, adam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  std::size_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Adam moments, aligned with the parameter list.
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// Applies one update from each parameter's `grad`. Non-finite gradients are
// rejected with NonFiniteError before anything is modified.
void optimizer_step(std::span<Parameter* const> params, OptimizerState& state);

class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double learning_rate, std::vector<Parameter*> params);

  void step() { optimizer_step(params_, state_); }
  void zero_grad();
  OptimizerState& state() { return state_; }
  const OptimizerState& state() const { return state_; }
  std::span<Parameter* const> params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  OptimizerState state_;
};

void zero_grads(std::span<Parameter* const> params);
double grad_norm(std::span<Parameter* const> params);
// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(std::span<Parameter* const> target, std::span<Parameter* const> online,
                 double tau);
void soft_update(Mlp& target, Mlp& online, double tau);

}  // namespace climrl::nn
