#pragma once

#include <span>
#include <vector>

#include "climrl/nn/autodiff.hpp"
#include "climrl/nn/tensor.hpp"
#include "climrl/rng.hpp"

// Diagonal gaussian policies with a state-independent log-std row.
namespace climrl::rl {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double gaussian_log_prob(std::span<const double> x, std::span<const double> mean,
                         std::span<const double> log_std);
double gaussian_entropy(std::span<const double> log_std);
// KL(N(mu1, s1) || N(mu2, s2)) summed over dimensions.
double gaussian_kl(std::span<const double> mu1, std::span<const double> log_std1,
                   std::span<const double> mu2, std::span<const double> log_std2);

// Row-wise log density (B x 1) of constant actions under N(mean, exp(log_std)).
nn::Var gaussian_log_prob(nn::Var actions, nn::Var mean, nn::Var log_std);
// Row-wise KL(old || new) (B x 1); `old` tensors are constants.
nn::Var gaussian_kl(const nn::Tensor& old_mean, const nn::Tensor& old_log_std, nn::Var mean,
                    nn::Var log_std);

// log(1 - tanh(u)^2), evaluated without cancellation.
double log1m_tanh_sq(double u);
nn::Var log1m_tanh_sq(nn::Var u);

struct SquashedSample {
  nn::Var action;    // B x d, tanh(u)
  nn::Var log_prob;  // B x 1
};

// Reparameterised tanh-gaussian sample: u = mean + exp(log_std) * noise.
SquashedSample squashed_sample(nn::Var mean, nn::Var log_std, const nn::Tensor& noise);

// Density of a = tanh(u), u ~ N(mean, exp(log_std)), single dimension.
double squashed_log_prob_1d(double a, double mean, double log_std);

nn::Tensor standard_normal(std::size_t rows, std::size_t cols, RngStream& rng);

}  // namespace climrl::rl
