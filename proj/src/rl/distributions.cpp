#include "climrl/rl/distributions.hpp"

#include <cmath>

#include "climrl/error.hpp"

namespace climrl::rl {

using nn::Tensor;
using nn::Var;

double gaussian_log_prob(std::span<const double> x, std::span<const double> mean,
                         std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += 0.5 + 0.5 * kLog2Pi + ls;
  return h;
}

double gaussian_kl(std::span<const double> mu1, std::span<const double> log_std1,
                   std::span<const double> mu2, std::span<const double> log_std2) {
  double kl = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    const double var1 = std::exp(2.0 * log_std1[i]);
    const double var2 = std::exp(2.0 * log_std2[i]);
    const double d = mu1[i] - mu2[i];
    kl += log_std2[i] - log_std1[i] + (var1 + d * d) / (2.0 * var2) - 0.5;
  }
  return kl;
}

Var gaussian_log_prob(Var actions, Var mean, Var log_std) {
  // z = (a - mu) * exp(-log_std)
  Var z = mul(sub(actions, mean), exp(neg(log_std)));
  Var per_dim = shift(sub(scale(square(z), -0.5), log_std), -0.5 * kLog2Pi);
  return sum_cols(per_dim);
}

Var gaussian_kl(const Tensor& old_mean, const Tensor& old_log_std, Var mean, Var log_std) {
  nn::Tape& t = *mean.tape();
  Var om = t.constant(old_mean);
  Var ols = t.constant(old_log_std);
  Var var_old = exp(scale(ols, 2.0));
  Var inv_var_new = exp(scale(log_std, -2.0));
  Var d = sub(om, mean);
  Var term = mul(add(var_old, square(d)), scale(inv_var_new, 0.5));
  return sum_cols(shift(add(sub(log_std, ols), term), -0.5));
}

double log1m_tanh_sq(double u) {
  // 1 - tanh^2 u = 4 / (e^u + e^-u)^2
  const double a = std::abs(u);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

Var log1m_tanh_sq(Var u) {
  return scale(shift(neg(add(u, softplus(scale(u, -2.0)))), std::log(2.0)), 2.0);
}

SquashedSample squashed_sample(Var mean, Var log_std, const Tensor& noise) {
  nn::Tape& t = *mean.tape();
  if (noise.rows() != mean.rows() || noise.cols() != mean.cols()) {
    throw ShapeError("squashed_sample: noise shape differs from mean");
  }
  Var xi = t.constant(noise);
  Var u = add(mean, mul(exp(log_std), xi));
  Var a = nn::tanh(u);
  Var base = shift(sub(scale(square(xi), -0.5), log_std), -0.5 * kLog2Pi);
  Var lp = sum_cols(sub(base, log1m_tanh_sq(u)));
  return {a, lp};
}

double squashed_log_prob_1d(double a, double mean, double log_std) {
  const double u = std::atanh(a);
  const double z = (u - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * kLog2Pi - log1m_tanh_sq(u);
}

Tensor standard_normal(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

}  // namespace climrl::rl
