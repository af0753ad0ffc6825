#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "climrl/env/env.hpp"
#include "climrl/nn/mlp.hpp"
#include "climrl/rl/agent.hpp"

namespace climrl::eval {

// Throws Error when either series has zero variance or the lengths differ.
double pearson(std::span<const double> x, std::span<const double> y);

struct PolicyCorrelation {
  std::vector<double> states;   // raw first observation component
  std::vector<double> actions;  // noise-free policy action, environment units
  double r = 0.0;
};

// Rolls out the policy with Gaussian action noise (normalised units) so the
// visited states vary, then pairs each of the last `window` states with the
// noise-free action the policy takes in it.
PolicyCorrelation policy_state_action_correlation(env::Env& env, rl::Algorithm algorithm,
                                                  const nn::Mlp& policy, std::uint64_t seed,
                                                  std::size_t window = 25, double noise_sd = 0.1);

// Mean per-step cost (negated reward) over the last `window` steps.
double final_window_cost(const rl::EpisodeTrace& trace, std::size_t window = 100);

struct ConstantBaseline {
  std::vector<double> action;  // environment units
  double cost = 0.0;
};

// Holds each action of a `per_dim`^d grid spanning the action box for a
// whole episode; sorted by final-window cost, best first.
std::vector<ConstantBaseline> constant_action_grid(env::Env& env, std::size_t per_dim = 5,
                                                   std::uint64_t seed = 1,
                                                   std::size_t window = 100);

}  // namespace climrl::eval
