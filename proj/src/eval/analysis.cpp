#include "climrl/eval/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"

namespace climrl::eval {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("pearson: need two equal series of length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error("pearson: a series has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

PolicyCorrelation policy_state_action_correlation(env::Env& env, rl::Algorithm algorithm,
                                                  const nn::Mlp& policy, std::uint64_t seed,
                                                  std::size_t window, double noise_sd) {
  rl::SpaceScaler scaler(env.observation_space(), env.action_space());
  const rl::EpisodeTrace tr = rl::run_policy_episode(env, algorithm, policy, scaler, seed, noise_sd);
  if (tr.observations.size() < window) throw Error("episode shorter than the correlation window");
  PolicyCorrelation out;
  for (std::size_t i = tr.observations.size() - window; i < tr.observations.size(); ++i) {
    const auto& s = tr.observations[i];
    out.states.push_back(s[0]);
    out.actions.push_back(
        scaler.action_to_env(rl::greedy_action(algorithm, policy, scaler.observation(s)))[0]);
  }
  out.r = pearson(out.states, out.actions);
  return out;
}

double final_window_cost(const rl::EpisodeTrace& trace, std::size_t window) {
  if (trace.rewards.size() < window || window == 0) throw Error("episode shorter than the cost window");
  double s = 0.0;
  for (std::size_t i = trace.rewards.size() - window; i < trace.rewards.size(); ++i) s -= trace.rewards[i];
  return s / static_cast<double>(window);
}

std::vector<ConstantBaseline> constant_action_grid(env::Env& env, std::size_t per_dim,
                                                   std::uint64_t seed, std::size_t window) {
  if (per_dim < 2) throw ConfigError("constant grid needs at least 2 points per dimension");
  const env::BoxSpace& box = env.action_space();
  const std::size_t d = box.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= per_dim;
  std::vector<ConstantBaseline> out;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> a(d);
    std::size_t rest = idx;
    for (std::size_t j = 0; j < d; ++j) {
      const double f = static_cast<double>(rest % per_dim) / static_cast<double>(per_dim - 1);
      rest /= per_dim;
      a[j] = box.low[j] + f * (box.high[j] - box.low[j]);
    }
    rl::EpisodeTrace tr;
    env.reset(seed);
    for (;;) {
      env::StepResult r = env.step(a);
      tr.rewards.push_back(r.reward);
      if (r.terminated || r.truncated) break;
    }
    out.push_back({a, final_window_cost(tr, window)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ConstantBaseline& x, const ConstantBaseline& y) { return x.cost < y.cost; });
  return out;
}

}  // namespace climrl::eval
