#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"
#include "climrl/rl/algos.hpp"

namespace climrl::rl {

using nn::Tensor;

DeterministicAgent::DeterministicAgent(const AlgoConfig& cfg, std::size_t obs_dim,
                                       std::size_t act_dim, std::uint64_t seed)
    : Agent(cfg, obs_dim, act_dim, seed),
      actor_(actor_spec(nn::HeadKind::tanh_scaled), init_rng_),
      actor_opt_(nn::OptimizerKind::adam, cfg_.learning_rate, actor_.parameters()) {}

std::vector<double> DeterministicAgent::act(std::span<const double> obs, bool explore) {
  const Tensor mu = actor_.predict(Tensor::row(obs));
  std::vector<double> a(mu.values().begin(), mu.values().end());
  if (explore) {
    for (double& v : a) v += noise_rng_.normal(0.0, cfg_.exploration_noise);
  }
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

// ---- DPG ---------------------------------------------------------------------

DpgAgent::DpgAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                   std::uint64_t seed)
    : DeterministicAgent(cfg, obs_dim, act_dim, seed),
      critic_(critic_spec(obs_dim + act_dim, 1), init_rng_),
      critic_opt_(nn::OptimizerKind::adam, cfg_.learning_rate, critic_.parameters()) {}

double DpgAgent::target(const Transition& t) const {
  if (t.done) return t.r;
  const Tensor s_next = Tensor::row(t.s_next);
  const Tensor q = critic_.predict(concat_cols(s_next, actor_.predict(s_next)));
  return t.r + cfg_.gamma * q.item();
}

void DpgAgent::observe(const Transition& t, long global_step) {
  const Tensor y = Tensor::matrix(1, 1, target(t));
  const Tensor sa = concat_cols(Tensor::row(t.s), Tensor::row(t.a));
  stats_.last_critic_loss = critic_mse_step(critic_, critic_opt_, sa, y);
  ++stats_.critic_updates;
  if (global_step % cfg_.policy_frequency == 0) {
    stats_.last_actor_loss = actor_q_step(actor_, actor_opt_, critic_, Tensor::row(t.s));
    ++stats_.actor_updates;
  }
}

// ---- DDPG --------------------------------------------------------------------

DdpgAgent::DdpgAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                     std::uint64_t seed)
    : DeterministicAgent(cfg, obs_dim, act_dim, seed),
      critic_(critic_spec(obs_dim + act_dim, 1), init_rng_),
      actor_target_(actor_),
      critic_target_(critic_),
      critic_opt_(nn::OptimizerKind::adam, cfg_.learning_rate, critic_.parameters()),
      buffer_(static_cast<std::size_t>(cfg_.buffer_size), obs_dim, act_dim, buffer_seed_) {}

Tensor DdpgAgent::targets(const Minibatch& mb) const {
  const Tensor q = critic_target_.predict(concat_cols(mb.s_next, actor_target_.predict(mb.s_next)));
  Tensor y = Tensor::matrix(mb.r.rows(), 1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = mb.r[i] + cfg_.gamma * (1.0 - mb.done[i]) * q[i];
  }
  return y;
}

void DdpgAgent::update(const Minibatch& mb, long global_step) {
  const Tensor y = targets(mb);
  stats_.last_critic_loss = critic_mse_step(critic_, critic_opt_, concat_cols(mb.s, mb.a), y);
  ++stats_.critic_updates;
  if (global_step % cfg_.policy_frequency == 0) {
    stats_.last_actor_loss = actor_q_step(actor_, actor_opt_, critic_, mb.s);
    ++stats_.actor_updates;
    nn::soft_update(actor_target_, actor_, cfg_.tau);
    nn::soft_update(critic_target_, critic_, cfg_.tau);
    ++stats_.target_updates;
  }
}

void DdpgAgent::observe(const Transition& t, long global_step) {
  buffer_.push(t);
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  if (global_step >= cfg_.learning_starts && buffer_.size() >= B) {
    update(buffer_.sample(B), global_step);
  }
}

// ---- TD3 ---------------------------------------------------------------------

Td3Agent::Td3Agent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                   std::uint64_t seed)
    : DeterministicAgent(cfg, obs_dim, act_dim, seed),
      buffer_(static_cast<std::size_t>(cfg_.buffer_size), obs_dim, act_dim, buffer_seed_) {
  for (int i = 0; i < 2; ++i) {
    critics_[i] = nn::Mlp(critic_spec(obs_dim + act_dim, 1), init_rng_);
    critic_targets_[i] = critics_[i];
    critic_opts_[i] =
        nn::Optimizer(nn::OptimizerKind::adam, cfg_.learning_rate, critics_[i].parameters());
  }
  actor_target_ = actor_;
}

Tensor Td3Agent::target_actions(const Tensor& s_next, Tensor* noise) {
  Tensor a = actor_target_.predict(s_next);
  Tensor eps(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    eps[i] = std::clamp(noise_rng_.normal(0.0, cfg_.policy_noise), -cfg_.noise_clip,
                        cfg_.noise_clip);
    a[i] = std::clamp(a[i] + eps[i], -1.0, 1.0);
  }
  if (noise) *noise = std::move(eps);
  return a;
}

Tensor Td3Agent::targets(const Minibatch& mb, const Tensor& next_actions) const {
  const Tensor sa = concat_cols(mb.s_next, next_actions);
  const Tensor q1 = critic_targets_[0].predict(sa);
  const Tensor q2 = critic_targets_[1].predict(sa);
  Tensor y = Tensor::matrix(mb.r.rows(), 1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = mb.r[i] + cfg_.gamma * (1.0 - mb.done[i]) * std::min(q1[i], q2[i]);
  }
  return y;
}

void Td3Agent::update(const Minibatch& mb, long global_step) {
  const Tensor y = targets(mb, target_actions(mb.s_next));
  const Tensor sa = concat_cols(mb.s, mb.a);
  double loss = 0.0;
  for (int i = 0; i < 2; ++i) loss += critic_mse_step(critics_[i], critic_opts_[i], sa, y);
  stats_.last_critic_loss = loss;
  ++stats_.critic_updates;
  if (global_step % cfg_.policy_frequency == 0) {
    stats_.last_actor_loss = actor_q_step(actor_, actor_opt_, critics_[0], mb.s);
    ++stats_.actor_updates;
    nn::soft_update(actor_target_, actor_, cfg_.tau);
    for (int i = 0; i < 2; ++i) nn::soft_update(critic_targets_[i], critics_[i], cfg_.tau);
    ++stats_.target_updates;
  }
}

void Td3Agent::observe(const Transition& t, long global_step) {
  buffer_.push(t);
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  if (global_step >= cfg_.learning_starts && buffer_.size() >= B) {
    update(buffer_.sample(B), global_step);
  }
}

}  // namespace climrl::rl
