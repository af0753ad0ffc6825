#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "climrl/env/env.hpp"
#include "climrl/nn/mlp.hpp"
#include "climrl/record.hpp"
#include "climrl/rl/config.hpp"
#include "climrl/rl/rollout.hpp"

namespace climrl::rl {

// Maps environment boxes to [-1, 1] and back. Agents only see normalised
// observations and emit normalised actions.
class SpaceScaler {
 public:
  SpaceScaler() = default;
  SpaceScaler(env::BoxSpace obs, env::BoxSpace act);

  std::vector<double> observation(std::span<const double> obs) const;
  // Clips into [-1, 1] first.
  std::vector<double> action_to_env(std::span<const double> a) const;
  std::vector<double> action_from_env(std::span<const double> a) const;
  std::size_t obs_dim() const { return obs_.size(); }
  std::size_t act_dim() const { return act_.size(); }

 private:
  env::BoxSpace obs_, act_;
};

struct UpdateStats {
  long critic_updates = 0;
  long actor_updates = 0;
  long target_updates = 0;
  long skipped_updates = 0;  // e.g. TRPO steps dropped after a CG failure
  double last_critic_loss = 0.0;
  double last_actor_loss = 0.0;
};

class Agent {
 public:
  Agent(AlgoConfig cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  virtual ~Agent() = default;

  const AlgoConfig& config() const { return cfg_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }

  // Normalised observation in, normalised action in [-1, 1] out.
  virtual std::vector<double> act(std::span<const double> obs, bool explore) = 0;
  // Called after every environment step with normalised quantities and the
  // scaled reward. `global_step` counts from 1.
  virtual void observe(const Transition& t, long global_step) = 0;
  virtual void end_episode(std::span<const double> /*last_obs*/, bool /*terminated*/) {}

  // Network used to act (the mean network for stochastic policies).
  virtual const nn::Mlp& policy() const = 0;
  const UpdateStats& stats() const { return stats_; }

 protected:
  nn::MlpSpec actor_spec(nn::HeadKind head) const;
  nn::MlpSpec critic_spec(std::size_t inputs, std::size_t outputs) const;
  // Throws NonFiniteError naming `what` if v is not finite.
  static void check_loss(double v, const char* what);

  AlgoConfig cfg_;
  std::size_t obs_dim_, act_dim_;
  RngStream init_rng_;
  RngStream noise_rng_;
  std::uint64_t buffer_seed_;
  UpdateStats stats_;
};

std::unique_ptr<Agent> make_agent(const AlgoConfig& cfg, std::size_t obs_dim,
                                  std::size_t act_dim, std::uint64_t seed);

struct TrainOptions {
  std::string experiment_id;
  std::uint64_t seed = 1;
  long total_steps = 0;
  // Called after every completed episode; returning false stops the run.
  std::function<bool(const RunRecord&)> on_episode;
};

// Runs the agent on the environment for total_steps steps. A non-finite loss
// stops the run and is reported in the record status.
RunRecord train(env::Env& env, Agent& agent, const SpaceScaler& scaler, const TrainOptions& opt);

struct EpisodeTrace {
  std::vector<std::vector<double>> observations;  // raw, before each action
  std::vector<std::vector<double>> actions;       // environment units
  std::vector<double> rewards;
  std::vector<env::StepResult> steps;
  double episodic_return = 0.0;
};

// One full episode without learning.
EpisodeTrace run_episode(env::Env& env, Agent& agent, const SpaceScaler& scaler, bool explore,
                         std::uint64_t seed);

// Noise-free normalised action of a saved policy network, matching
// Agent::act(obs, false) for the algorithm that trained it.
std::vector<double> greedy_action(Algorithm algorithm, const nn::Mlp& policy,
                                  std::span<const double> obs);
// noise_sd > 0 adds Gaussian noise (normalised units) to every action.
EpisodeTrace run_policy_episode(env::Env& env, Algorithm algorithm, const nn::Mlp& policy,
                                const SpaceScaler& scaler, std::uint64_t seed,
                                double noise_sd = 0.0);

}  // namespace climrl::rl
