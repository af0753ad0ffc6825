#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"
#include "climrl/rl/algos.hpp"
#include "climrl/rl/distributions.hpp"

namespace climrl::rl {

using nn::Tensor;
using nn::Var;

SquashedAgent::SquashedAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                             std::uint64_t seed, double actor_lr, double alpha_lr)
    : Agent(cfg, obs_dim, act_dim, seed),
      actor_(actor_spec(nn::HeadKind::gaussian), init_rng_),
      actor_opt_(nn::OptimizerKind::adam, actor_lr, actor_.parameters()),
      log_alpha_(Tensor::matrix(1, 1, std::log(std::max(cfg_.alpha, 1e-300)))),
      alpha_opt_(nn::OptimizerKind::adam, alpha_lr, {&log_alpha_}) {}

double SquashedAgent::alpha() const {
  if (!cfg_.autotune_alpha) return cfg_.alpha;
  return std::exp(log_alpha_.value.item());
}

std::vector<double> SquashedAgent::act(std::span<const double> obs, bool explore) {
  const Tensor mu = actor_.predict(Tensor::row(obs));
  const std::vector<double> ls = actor_.log_std_values();
  std::vector<double> a(mu.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = explore ? mu[i] + std::exp(ls[i]) * noise_rng_.normal() : mu[i];
    a[i] = std::tanh(u);
  }
  return a;
}

SquashedAgent::Sample SquashedAgent::sample(const Tensor& s) {
  const Tensor mu = actor_.predict(s);
  const std::vector<double> ls = actor_.log_std_values();
  Sample out{Tensor(mu.shape()), Tensor::matrix(mu.rows(), 1)};
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    double lp = 0.0;
    for (std::size_t c = 0; c < mu.cols(); ++c) {
      const double xi = noise_rng_.normal();
      const double u = mu(r, c) + std::exp(ls[c]) * xi;
      out.action(r, c) = std::tanh(u);
      lp += -0.5 * xi * xi - ls[c] - 0.5 * kLog2Pi - log1m_tanh_sq(u);
    }
    out.log_prob[r] = lp;
  }
  return out;
}

void SquashedAgent::actor_alpha_step(const Tensor& s,
                                     const std::function<Var(nn::Tape&, Var, Var)>& q) {
  const double a = alpha();
  actor_opt_.zero_grad();
  nn::Tape tape;
  Var sv = tape.frozen(s);
  Var mu = actor_.forward(tape, sv);
  const Tensor noise = standard_normal(s.rows(), act_dim_, noise_rng_);
  SquashedSample smp = squashed_sample(mu, actor_.log_std(tape), noise);
  Var loss = mean(sub(scale(smp.log_prob, a), q(tape, sv, smp.action)));
  const double l = loss.value().item();
  check_loss(l, "actor loss");
  const Tensor log_prob = smp.log_prob.value();
  tape.backward(loss);
  actor_opt_.step();
  stats_.last_actor_loss = l;
  ++stats_.actor_updates;

  if (cfg_.autotune_alpha) {
    // d/d(log alpha) of mean(-alpha (log_prob + target_entropy))
    double m = 0.0;
    for (double v : log_prob.values()) m += v + target_entropy();
    m /= static_cast<double>(log_prob.size());
    log_alpha_.grad[0] = -a * m;
    alpha_opt_.step();
  }
}

// ---- SAC ---------------------------------------------------------------------

SacAgent::SacAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                   std::uint64_t seed)
    : SquashedAgent(cfg, obs_dim, act_dim, seed, cfg.policy_lr, cfg.q_lr),
      buffer_(static_cast<std::size_t>(cfg_.buffer_size), obs_dim, act_dim, buffer_seed_) {
  for (int i = 0; i < 2; ++i) {
    critics_[i] = nn::Mlp(critic_spec(obs_dim + act_dim, 1), init_rng_);
    critic_targets_[i] = critics_[i];
    critic_opts_[i] = nn::Optimizer(nn::OptimizerKind::adam, cfg_.q_lr, critics_[i].parameters());
  }
}

Tensor SacAgent::targets(const Minibatch& mb, const Sample& next) const {
  const Tensor sa = concat_cols(mb.s_next, next.action);
  const Tensor q1 = critic_targets_[0].predict(sa);
  const Tensor q2 = critic_targets_[1].predict(sa);
  const double a = alpha();
  Tensor y = Tensor::matrix(mb.r.rows(), 1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double soft = std::min(q1[i], q2[i]) - a * next.log_prob[i];
    y[i] = mb.r[i] + cfg_.gamma * (1.0 - mb.done[i]) * soft;
  }
  return y;
}

void SacAgent::update(const Minibatch& mb, long global_step) {
  const Tensor y = targets(mb, sample(mb.s_next));
  const Tensor sa = concat_cols(mb.s, mb.a);
  double loss = 0.0;
  for (int i = 0; i < 2; ++i) loss += critic_mse_step(critics_[i], critic_opts_[i], sa, y);
  stats_.last_critic_loss = loss;
  ++stats_.critic_updates;
  if (global_step % cfg_.policy_frequency == 0) {
    auto q = [this](nn::Tape&, Var s, Var a) {
      Var sa_v = nn::concat_cols(s, a);
      return minimum(critics_[0].forward(*s.tape(), sa_v, false),
                     critics_[1].forward(*s.tape(), sa_v, false));
    };
    for (int k = 0; k < cfg_.policy_frequency; ++k) actor_alpha_step(mb.s, q);
  }
  if (global_step % cfg_.target_network_frequency == 0) {
    for (int i = 0; i < 2; ++i) nn::soft_update(critic_targets_[i], critics_[i], cfg_.tau);
    ++stats_.target_updates;
  }
}

void SacAgent::observe(const Transition& t, long global_step) {
  buffer_.push(t);
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  if (global_step >= cfg_.learning_starts && buffer_.size() >= B) {
    update(buffer_.sample(B), global_step);
  }
}

// ---- TQC ---------------------------------------------------------------------

TqcAgent::TqcAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                   std::uint64_t seed)
    : SquashedAgent(cfg, obs_dim, act_dim, seed, cfg.actor_adam_lr, cfg.alpha_adam_lr),
      taus_(nn::quantile_fractions(static_cast<std::size_t>(cfg.n_quantiles))),
      buffer_(static_cast<std::size_t>(cfg_.buffer_size), obs_dim, act_dim, buffer_seed_) {
  const auto nc = static_cast<std::size_t>(cfg_.n_critics);
  critics_.reserve(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    critics_.emplace_back(critic_spec(obs_dim + act_dim, static_cast<std::size_t>(cfg_.n_quantiles)),
                          init_rng_);
  }
  critic_targets_ = critics_;
  critic_opts_.reserve(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    critic_opts_.emplace_back(nn::OptimizerKind::adam, cfg_.critic_adam_lr,
                              critics_[i].parameters());
  }
}

Tensor TqcAgent::targets(const Minibatch& mb, const Sample& next) const {
  const std::size_t B = mb.r.rows(), nq = static_cast<std::size_t>(cfg_.n_quantiles);
  const std::size_t nc = critics_.size();
  const std::size_t kept = nc * (nq - static_cast<std::size_t>(cfg_.n_drop));
  const Tensor sa = concat_cols(mb.s_next, next.action);
  std::vector<Tensor> z;
  for (const nn::Mlp& c : critic_targets_) z.push_back(c.predict(sa));
  const double a = alpha();
  Tensor y = Tensor::matrix(B, kept);
  std::vector<double> pool(nc * nq);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t k = 0; k < nq; ++k) pool[i * nq + k] = z[i](b, k);
    }
    std::sort(pool.begin(), pool.end());
    for (std::size_t j = 0; j < kept; ++j) {
      y(b, j) = mb.r[b] + cfg_.gamma * (1.0 - mb.done[b]) * (pool[j] - a * next.log_prob[b]);
    }
  }
  return y;
}

void TqcAgent::update(const Minibatch& mb, long global_step) {
  const Tensor y = targets(mb, sample(mb.s_next));
  const Tensor sa = concat_cols(mb.s, mb.a);
  double total = 0.0;
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    critic_opts_[i].zero_grad();
    nn::Tape tape;
    Var pred = critics_[i].forward(tape, tape.frozen(sa));
    Var loss = nn::quantile_huber_loss(pred, y, taus_, 1.0);
    const double l = loss.value().item();
    check_loss(l, "quantile critic loss");
    tape.backward(loss);
    critic_opts_[i].step();
    total += l;
  }
  stats_.last_critic_loss = total;
  ++stats_.critic_updates;
  if (global_step % cfg_.policy_frequency == 0) {
    auto q = [this](nn::Tape& tape, Var s, Var a) {
      Var sa_v = nn::concat_cols(s, a);
      Var acc = mean_cols(critics_[0].forward(tape, sa_v, false));
      for (std::size_t i = 1; i < critics_.size(); ++i) {
        acc = add(acc, mean_cols(critics_[i].forward(tape, sa_v, false)));
      }
      return scale(acc, 1.0 / static_cast<double>(critics_.size()));
    };
    actor_alpha_step(mb.s, q);
  }
  if (global_step % cfg_.target_network_frequency == 0) {
    for (std::size_t i = 0; i < critics_.size(); ++i) {
      nn::soft_update(critic_targets_[i], critics_[i], cfg_.tau);
    }
    ++stats_.target_updates;
  }
}

void TqcAgent::observe(const Transition& t, long global_step) {
  buffer_.push(t);
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  if (global_step >= cfg_.learning_starts && buffer_.size() >= B) {
    update(buffer_.sample(B), global_step);
  }
}

}  // namespace climrl::rl
