#pragma once

#include <deque>
#include <string>
#include <utility>

#include "climrl/env/env.hpp"

namespace climrl::env {

enum class BiasCorrVersion { v0, v1, v2 };

BiasCorrVersion biascorr_version_from_string(const std::string& s);
std::string to_string(BiasCorrVersion v);

struct BiasCorrParams {
  double T_observed = 321.75;
  double T_physics = 323.75;
  double relax_a = 0.2;
  double relax_b = 0.1;
  double T_initial = 320.0;
  double norm_low = 310.0;
  double norm_high = 330.0;
  int lag = 5;
  int max_steps = 200;

  void validate() const;
};

// One step of the implicit temperature update, solved in closed form.
double update_temperature(double T_current, double u, const BiasCorrParams& p);

// Per-step reward before any delay: v0 scores T_new, v1/v2 score T_current.
double biascorr_reward(BiasCorrVersion version, double T_new, double T_current,
                       const BiasCorrParams& p);

class BiasCorrEnv final : public Env {
 public:
  explicit BiasCorrEnv(BiasCorrVersion version, BiasCorrParams params = {});

  std::string name() const override;
  const BoxSpace& observation_space() const override { return obs_space_; }
  const BoxSpace& action_space() const override { return act_space_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<BiasCorrEnv>(*this); }

  BiasCorrVersion version() const { return version_; }
  const BiasCorrParams& params() const { return params_; }
  double temperature() const { return T_; }
  double normalize(double T) const;
  std::size_t pending_rewards() const { return pending_.size(); }

 protected:
  std::vector<double> reset_state() override;
  StepResult advance(const std::vector<double>& action, bool last_step) override;

 private:
  BiasCorrVersion version_;
  BiasCorrParams params_;
  BoxSpace obs_space_;
  BoxSpace act_space_;
  double T_ = 0.0;
  // (due step index, reward), v2 only.
  std::deque<std::pair<int, double>> pending_;
};

}  // namespace climrl::env
