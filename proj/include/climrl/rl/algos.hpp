#pragma once

#include <functional>
#include <vector>

#include "climrl/nn/optim.hpp"
#include "climrl/rl/agent.hpp"

namespace climrl::rl {

nn::Tensor concat_cols(const nn::Tensor& a, const nn::Tensor& b);
nn::Tensor stack_rows(const std::vector<std::vector<double>>& rows);

// Critic regression step on (inputs, targets); returns the loss.
double critic_mse_step(nn::Mlp& critic, nn::Optimizer& opt, const nn::Tensor& inputs,
                       const nn::Tensor& targets);
// Deterministic-actor ascent on Q(s, pi(s)); returns the loss (-mean Q).
double actor_q_step(nn::Mlp& actor, nn::Optimizer& opt, nn::Mlp& critic, const nn::Tensor& s);

class ReinforceAgent final : public Agent {
 public:
  ReinforceAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                 std::uint64_t seed);
  std::vector<double> act(std::span<const double> obs, bool explore) override;
  void observe(const Transition& t, long global_step) override;
  void end_episode(std::span<const double> last_obs, bool terminated) override;
  const nn::Mlp& policy() const override { return policy_; }
  nn::Mlp& policy_net() { return policy_; }

  // Loss -(1/|B|) sum_t G_t log pi(a_t|s_t) for a frozen episode; gradients
  // are left in the policy parameters.
  double loss_and_grad(const nn::Tensor& states, const nn::Tensor& actions,
                       const std::vector<double>& returns);

 private:
  nn::Mlp policy_;
  nn::Optimizer opt_;
  std::vector<std::vector<double>> states_, actions_;
  std::vector<double> rewards_;
  std::vector<double> last_raw_;
};

// Deterministic actor with gaussian exploration; base of DPG, DDPG and TD3.
class DeterministicAgent : public Agent {
 public:
  DeterministicAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                     std::uint64_t seed);
  std::vector<double> act(std::span<const double> obs, bool explore) override;
  const nn::Mlp& policy() const override { return actor_; }
  nn::Mlp& actor() { return actor_; }

 protected:
  nn::Mlp actor_;
  nn::Optimizer actor_opt_;
};

class DpgAgent final : public DeterministicAgent {
 public:
  DpgAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  void observe(const Transition& t, long global_step) override;
  nn::Mlp& critic() { return critic_; }
  // y = r + gamma (1 - d) Q(s', pi(s')), online networks only.
  double target(const Transition& t) const;

 private:
  nn::Mlp critic_;
  nn::Optimizer critic_opt_;
};

class DdpgAgent final : public DeterministicAgent {
 public:
  DdpgAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  void observe(const Transition& t, long global_step) override;
  void update(const Minibatch& mb, long global_step);
  nn::Tensor targets(const Minibatch& mb) const;
  nn::Mlp& critic() { return critic_; }
  nn::Mlp& target_actor() { return actor_target_; }
  nn::Mlp& target_critic() { return critic_target_; }
  ReplayBuffer& buffer() { return buffer_; }

 private:
  nn::Mlp critic_, actor_target_, critic_target_;
  nn::Optimizer critic_opt_;
  ReplayBuffer buffer_;
};

class Td3Agent final : public DeterministicAgent {
 public:
  Td3Agent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  void observe(const Transition& t, long global_step) override;
  void update(const Minibatch& mb, long global_step);
  // Smoothed target actions; `noise` receives the clipped noise draws.
  nn::Tensor target_actions(const nn::Tensor& s_next, nn::Tensor* noise = nullptr);
  nn::Tensor targets(const Minibatch& mb, const nn::Tensor& next_actions) const;
  nn::Mlp& critic(int i) { return critics_[i]; }
  nn::Mlp& target_critic(int i) { return critic_targets_[i]; }

 private:
  nn::Mlp critics_[2], critic_targets_[2], actor_target_;
  nn::Optimizer critic_opts_[2];
  ReplayBuffer buffer_;
};

// Tanh-squashed gaussian actor with automatic entropy tuning; base of SAC and
// TQC.
class SquashedAgent : public Agent {
 public:
  SquashedAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                std::uint64_t seed, double actor_lr, double alpha_lr);
  std::vector<double> act(std::span<const double> obs, bool explore) override;
  const nn::Mlp& policy() const override { return actor_; }
  nn::Mlp& actor() { return actor_; }
  double alpha() const;
  double target_entropy() const { return -static_cast<double>(act_dim_); }

  struct Sample {
    nn::Tensor action;    // B x d
    nn::Tensor log_prob;  // B x 1
  };
  // Tape-free sample from the current policy.
  Sample sample(const nn::Tensor& s);

 protected:
  // Shared actor/alpha step; `q` maps (tape, states, actions) to a B x 1 value.
  void actor_alpha_step(const nn::Tensor& s,
                        const std::function<nn::Var(nn::Tape&, nn::Var, nn::Var)>& q);

  nn::Mlp actor_;
  nn::Optimizer actor_opt_;
  nn::Parameter log_alpha_;
  nn::Optimizer alpha_opt_;
};

class SacAgent final : public SquashedAgent {
 public:
  SacAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  void observe(const Transition& t, long global_step) override;
  void update(const Minibatch& mb, long global_step);
  nn::Tensor targets(const Minibatch& mb, const Sample& next) const;
  nn::Mlp& critic(int i) { return critics_[i]; }

 private:
  nn::Mlp critics_[2], critic_targets_[2];
  nn::Optimizer critic_opts_[2];
  ReplayBuffer buffer_;
};

class TqcAgent final : public SquashedAgent {
 public:
  TqcAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  void observe(const Transition& t, long global_step) override;
  void update(const Minibatch& mb, long global_step);
  // Pooled, sorted and truncated target atoms (B x kept).
  nn::Tensor targets(const Minibatch& mb, const Sample& next) const;
  std::size_t critic_count() const { return critics_.size(); }
  nn::Mlp& critic(std::size_t i) { return critics_[i]; }

 private:
  std::vector<nn::Mlp> critics_, critic_targets_;
  std::vector<nn::Optimizer> critic_opts_;
  std::vector<double> taus_;
  ReplayBuffer buffer_;
};

// Gaussian actor and value network trained from whole episodes; base of PPO
// and TRPO.
class OnPolicyAgent : public Agent {
 public:
  OnPolicyAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                std::uint64_t seed);
  std::vector<double> act(std::span<const double> obs, bool explore) override;
  void observe(const Transition& t, long global_step) override;
  void end_episode(std::span<const double> last_obs, bool terminated) override;
  const nn::Mlp& policy() const override { return actor_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& value() { return value_; }

  // Mean KL(old || current) over the rows of `states`.
  double mean_kl(const nn::Tensor& states, const nn::Tensor& old_mean,
                 const std::vector<double>& old_log_std) const;

 protected:
  virtual void update(TrajectoryBatch& batch) = 0;
  std::vector<std::size_t> shuffled(std::size_t n);

  nn::Mlp actor_, value_;
  TrajectoryBatch batch_;
  std::vector<double> last_raw_;
  double last_log_prob_ = 0.0;
  double last_value_ = 0.0;
};

// mean(min(r A, clip(r, 1 - eps, 1 + eps) A))
nn::Var clipped_surrogate(nn::Var ratio, nn::Var advantages, double eps);

class PpoAgent final : public OnPolicyAgent {
 public:
  PpoAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);
  long epochs_run() const { return epochs_run_; }

 protected:
  void update(TrajectoryBatch& batch) override;

 private:
  nn::Optimizer opt_;
  long epochs_run_ = 0;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  bool ok = true;
  double residual_norm = 0.0;
};

// Solves A x = b for symmetric positive definite A given as a product
// callback. Fails (ok == false) on non-finite values or a non-positive
// curvature p'Ap.
CgResult conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& Av,
    const std::vector<double>& b, int max_iters, double tol = 1e-10);

class TrpoAgent final : public OnPolicyAgent {
 public:
  TrpoAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);

  // Fisher-vector product of the policy over `states`, plus damping.
  std::vector<double> fisher_vector_product(const nn::Tensor& states,
                                            const std::vector<double>& v);

 protected:
  void update(TrajectoryBatch& batch) override;

 private:
  nn::Optimizer value_opt_;
};

}  // namespace climrl::rl
