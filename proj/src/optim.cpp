#include "climrl/nn/optim.hpp"

#include <cmath>
#include <string>

#include "climrl/error.hpp"

namespace climrl::nn {

void optimizer_step(std::span<Parameter* const> params, OptimizerState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->grad.same_shape(params[i]->value)) {
      throw ShapeError("gradient shape does not match parameter " + std::to_string(i));
    }
    if (!params[i]->grad.all_finite()) {
      throw NonFiniteError("non-finite gradient for parameter " + std::to_string(i) +
                           "; update rejected");
    }
  }
  ++state.step_count;
  if (state.kind == OptimizerKind::sgd) {
    for (Parameter* p : params) {
      auto v = p->value.values();
      auto g = p->grad.values();
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= state.learning_rate * g[j];
    }
    return;
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape(), 0.0);
      state.second_moment.emplace_back(p->value.shape(), 0.0);
    }
  }
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto v = params[i]->value.values();
    auto g = params[i]->grad.values();
    auto m = state.first_moment[i].values();
    auto s = state.second_moment[i].values();
    for (std::size_t j = 0; j < v.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      s[j] = state.beta2 * s[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double s_hat = s[j] / bias2;
      v[j] -= state.learning_rate * m_hat / (std::sqrt(s_hat) + state.epsilon);
    }
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::vector<Parameter*> params)
    : params_(std::move(params)) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  state_.kind = kind;
  state_.learning_rate = learning_rate;
}

void Optimizer::zero_grad() { zero_grads(params_); }

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

double grad_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / (norm + 1e-6);
    for (Parameter* p : params) {
      for (double& g : p->grad.values()) g *= factor;
    }
  }
  return norm;
}

void soft_update(std::span<Parameter* const> target, std::span<Parameter* const> online,
                 double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("soft update tau must lie in [0, 1]");
  if (target.size() != online.size()) throw ShapeError("soft_update: parameter lists differ");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target[i]->value.same_shape(online[i]->value)) {
      throw ShapeError("soft_update: parameter " + std::to_string(i) + " shape mismatch");
    }
    auto t = target[i]->value.values();
    auto o = online[i]->value.values();
    if (tau == 1.0) {
      std::copy(o.begin(), o.end(), t.begin());
      continue;
    }
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = tau * o[j] + (1.0 - tau) * t[j];
  }
}

void soft_update(Mlp& target, Mlp& online, double tau) {
  const auto t = target.parameters();
  const auto o = online.parameters();
  soft_update(t, o, tau);
}

}  // namespace climrl::nn
