#include <algorithm>
#include <cmath>
#include <numeric>

#include "climrl/error.hpp"
#include "climrl/rl/algos.hpp"
#include "climrl/rl/distributions.hpp"

namespace climrl::rl {

using nn::Tensor;
using nn::Var;

namespace {

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
  Tensor out = Tensor::matrix(end - begin, src.cols());
  for (std::size_t r = begin; r < end; ++r) {
    std::copy_n(src.data() + idx[r] * src.cols(), src.cols(), out.data() + (r - begin) * src.cols());
  }
  return out;
}

Tensor column(const std::vector<double>& v) {
  Tensor t = Tensor::matrix(v.size(), 1);
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

struct Prepared {
  Tensor states, actions, old_log_prob, advantages, returns, old_mean;
  std::vector<double> old_log_std;
};

}  // namespace

OnPolicyAgent::OnPolicyAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                             std::uint64_t seed)
    : Agent(cfg, obs_dim, act_dim, seed),
      actor_(actor_spec(nn::HeadKind::gaussian), init_rng_),
      value_(critic_spec(obs_dim, 1), init_rng_) {}

std::vector<double> OnPolicyAgent::act(std::span<const double> obs, bool explore) {
  const Tensor s = Tensor::row(obs);
  const Tensor mu = actor_.predict(s);
  std::vector<double> a(mu.values().begin(), mu.values().end());
  if (explore) {
    const std::vector<double> ls = actor_.log_std_values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += std::exp(ls[i]) * noise_rng_.normal();
    last_raw_ = a;
    last_log_prob_ = gaussian_log_prob(a, mu.values(), ls);
    last_value_ = value_.predict(s).item();
  }
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

void OnPolicyAgent::observe(const Transition& t, long) {
  if (batch_.steps.empty()) batch_.begin_episode();
  Transition stored = t;
  stored.a = last_raw_;
  batch_.steps.push_back(std::move(stored));
  batch_.log_probs.push_back(last_log_prob_);
  batch_.values.push_back(last_value_);
}

void OnPolicyAgent::end_episode(std::span<const double> last_obs, bool terminated) {
  if (batch_.steps.empty()) return;
  const std::size_t T = batch_.size();
  std::vector<double> rewards(T), values(batch_.values);
  std::vector<bool> dones(T, false);
  for (std::size_t t = 0; t < T; ++t) {
    rewards[t] = batch_.steps[t].r;
    dones[t] = batch_.steps[t].done;
  }
  // Truncated episodes bootstrap from the value of the final observation.
  values.push_back(terminated ? 0.0 : value_.predict(Tensor::row(last_obs)).item());
  GaeResult g = gae(rewards, values, dones, cfg_.gamma, cfg_.gae_lambda);
  batch_.returns = std::move(g.returns);
  batch_.advantages = std::move(g.advantages);
  if (cfg_.normalize_advantages) normalize_advantages(batch_.advantages);
  batch_.has_advantages = true;
  update(batch_);
  batch_.clear();
}

std::vector<std::size_t> OnPolicyAgent::shuffled(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[noise_rng_.uniform_int(i)]);
  }
  return idx;
}

double OnPolicyAgent::mean_kl(const Tensor& states, const Tensor& old_mean,
                              const std::vector<double>& old_log_std) const {
  const Tensor mu = actor_.predict(states);
  const std::vector<double> ls = actor_.log_std_values();
  double kl = 0.0;
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    kl += gaussian_kl(old_mean.row_span(r), old_log_std, mu.row_span(r), ls);
  }
  return kl / static_cast<double>(mu.rows());
}

namespace {

Prepared prepare(const TrajectoryBatch& b, const nn::Mlp& actor) {
  Prepared p;
  std::vector<std::vector<double>> s, a;
  for (const Transition& t : b.steps) {
    s.push_back(t.s);
    a.push_back(t.a);
  }
  p.states = stack_rows(s);
  p.actions = stack_rows(a);
  p.old_log_prob = column(b.log_probs);
  p.advantages = column(b.advantages);
  p.returns = column(b.returns);
  p.old_mean = actor.predict(p.states);
  p.old_log_std = actor.log_std_values();
  return p;
}

std::size_t minibatch_size(std::size_t n, int num_minibatches) {
  const auto m = static_cast<std::size_t>(num_minibatches);
  return std::max<std::size_t>(1, (n + m - 1) / m);
}

}  // namespace

// ---- PPO ---------------------------------------------------------------------

PpoAgent::PpoAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                   std::uint64_t seed)
    : OnPolicyAgent(cfg, obs_dim, act_dim, seed) {
  std::vector<nn::Parameter*> params = actor_.parameters();
  for (nn::Parameter* p : value_.parameters()) params.push_back(p);
  opt_ = nn::Optimizer(nn::OptimizerKind::adam, cfg_.learning_rate, params);
}

Var clipped_surrogate(Var ratio, Var advantages, double eps) {
  return mean(minimum(mul(ratio, advantages),
                      mul(clamp(ratio, 1.0 - eps, 1.0 + eps), advantages)));
}

void PpoAgent::update(TrajectoryBatch& batch) {
  const Prepared p = prepare(batch, actor_);
  const std::size_t n = batch.size();
  const std::size_t mb = minibatch_size(n, cfg_.num_minibatches);
  const double eps = cfg_.clip_coef;
  for (int epoch = 0; epoch < cfg_.update_epochs; ++epoch) {
    ++epochs_run_;
    const std::vector<std::size_t> idx = shuffled(n);
    for (std::size_t begin = 0; begin < n; begin += mb) {
      const std::size_t end = std::min(n, begin + mb);
      const Tensor S = gather_rows(p.states, idx, begin, end);
      const Tensor A = gather_rows(p.actions, idx, begin, end);
      const Tensor old_lp = gather_rows(p.old_log_prob, idx, begin, end);
      const Tensor adv = gather_rows(p.advantages, idx, begin, end);
      const Tensor ret = gather_rows(p.returns, idx, begin, end);

      opt_.zero_grad();
      nn::Tape tape;
      Var sv = tape.frozen(S);
      Var mu = actor_.forward(tape, sv);
      Var ls = actor_.log_std(tape);
      Var lp = gaussian_log_prob(tape.frozen(A), mu, ls);
      Var ratio = exp(sub(lp, tape.frozen(old_lp)));
      Var pg_loss = neg(clipped_surrogate(ratio, tape.frozen(adv), eps));
      Var v_loss = mean(square(sub(value_.forward(tape, sv), tape.frozen(ret))));
      Var entropy = sum(shift(ls, 0.5 + 0.5 * kLog2Pi));
      Var loss = add(add(pg_loss, scale(v_loss, cfg_.vf_coef)), scale(entropy, -cfg_.ent_coef));
      const double l = loss.value().item();
      check_loss(l, "PPO loss");
      tape.backward(loss);
      nn::clip_grad_norm(opt_.params(), cfg_.max_grad_norm);
      opt_.step();
      stats_.last_actor_loss = pg_loss.value().item();
      stats_.last_critic_loss = v_loss.value().item();
      ++stats_.actor_updates;
      ++stats_.critic_updates;
    }
    if (mean_kl(p.states, p.old_mean, p.old_log_std) > cfg_.kl_limit) break;
  }
}

// ---- TRPO --------------------------------------------------------------------

CgResult conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& Av,
    const std::vector<double>& b, int max_iters, double tol) {
  const std::size_t n = b.size();
  CgResult res;
  res.x.assign(n, 0.0);
  std::vector<double> r = b, p = b;
  double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  res.residual_norm = std::sqrt(rr);
  if (!std::isfinite(rr)) {
    res.ok = false;
    return res;
  }
  for (int it = 0; it < max_iters && res.residual_norm > tol; ++it) {
    const std::vector<double> Ap = Av(p);
    const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
    if (!std::isfinite(pAp) || pAp <= 0.0) {
      res.ok = false;
      return res;
    }
    const double alpha = rr / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rr_new = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    res.iterations = it + 1;
    res.residual_norm = std::sqrt(rr_new);
    if (!std::isfinite(rr_new)) {
      res.ok = false;
      return res;
    }
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
  return res;
}

TrpoAgent::TrpoAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                     std::uint64_t seed)
    : OnPolicyAgent(cfg, obs_dim, act_dim, seed),
      value_opt_(nn::OptimizerKind::adam, cfg_.learning_rate, value_.parameters()) {}

std::vector<double> TrpoAgent::fisher_vector_product(const Tensor& states,
                                                     const std::vector<double>& v) {
  const std::size_t P = actor_.parameter_count();
  const std::vector<double> ls = actor_.log_std_values();
  Tensor w = actor_.jvp(states, v);
  const double inv_m = 1.0 / static_cast<double>(states.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) *= std::exp(-2.0 * ls[c]) * inv_m;
  }
  actor_.zero_grad();
  nn::Tape tape;
  Var mu = actor_.forward(tape, tape.frozen(states));
  tape.backward(mu, w);
  std::vector<double> out = actor_.flat_gradients();
  // The log-std block of the gaussian Fisher is 2 I.
  for (std::size_t d = 0; d < act_dim_; ++d) out[P - act_dim_ + d] = 2.0 * v[P - act_dim_ + d];
  for (std::size_t i = 0; i < P; ++i) out[i] += cfg_.cg_damping * v[i];
  actor_.zero_grad();
  return out;
}

void TrpoAgent::update(TrajectoryBatch& batch) {
  const Prepared p = prepare(batch, actor_);
  const std::size_t n = batch.size();
  const std::size_t mb = minibatch_size(n, cfg_.num_minibatches);
  for (int epoch = 0; epoch < cfg_.update_epochs; ++epoch) {
    const std::vector<std::size_t> idx = shuffled(n);
    for (std::size_t begin = 0; begin < n; begin += mb) {
      const std::size_t end = std::min(n, begin + mb);
      const Tensor S = gather_rows(p.states, idx, begin, end);
      const Tensor A = gather_rows(p.actions, idx, begin, end);
      const Tensor old_lp = gather_rows(p.old_log_prob, idx, begin, end);
      const Tensor adv = gather_rows(p.advantages, idx, begin, end);
      const Tensor ret = gather_rows(p.returns, idx, begin, end);

      {
        value_opt_.zero_grad();
        nn::Tape tape;
        Var v = value_.forward(tape, tape.frozen(S));
        Var loss = scale(mean(square(sub(v, tape.frozen(ret)))), 0.5);
        const double l = loss.value().item();
        check_loss(l, "TRPO value loss");
        tape.backward(loss);
        nn::clip_grad_norm(value_opt_.params(), cfg_.max_grad_norm);
        value_opt_.step();
        stats_.last_critic_loss = l;
        ++stats_.critic_updates;
      }

      auto surrogate = [&](bool with_grad) {
        actor_.zero_grad();
        nn::Tape tape;
        Var mu = actor_.forward(tape, tape.frozen(S), with_grad);
        Var lp = gaussian_log_prob(tape.frozen(A), mu, actor_.log_std(tape, with_grad));
        Var L = mean(mul(exp(sub(lp, tape.frozen(old_lp))), tape.frozen(adv)));
        const double v = L.value().item();
        if (with_grad) tape.backward(L);
        return v;
      };
      const double L0 = surrogate(true);
      check_loss(L0, "TRPO surrogate");
      const std::vector<double> g = actor_.flat_gradients();
      actor_.zero_grad();
      double gnorm = 0.0;
      for (double x : g) gnorm += x * x;
      if (gnorm == 0.0) continue;

      const CgResult cg = conjugate_gradient(
          [&](const std::vector<double>& v) { return fisher_vector_product(S, v); }, g,
          cfg_.cg_iters);
      if (!cg.ok) {
        ++stats_.skipped_updates;
        continue;
      }
      const std::vector<double> Fx = fisher_vector_product(S, cg.x);
      const double shs = std::inner_product(cg.x.begin(), cg.x.end(), Fx.begin(), 0.0);
      if (!(shs > 0.0) || !std::isfinite(shs)) {
        ++stats_.skipped_updates;
        continue;
      }
      const double step = std::sqrt(2.0 * cfg_.kl_limit / shs);
      const std::vector<double> theta0 = actor_.flat_parameters();
      const Tensor pre_mean = actor_.predict(S);
      const std::vector<double> pre_ls = actor_.log_std_values();
      bool accepted = false;
      std::vector<double> theta(theta0.size());
      double frac = 1.0;
      for (int k = 0; k < cfg_.line_search_steps; ++k, frac *= 0.5) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = theta0[i] + frac * step * cg.x[i];
        actor_.set_flat_parameters(theta);
        const double L = surrogate(false);
        const double kl = mean_kl(S, pre_mean, pre_ls);
        if (std::isfinite(L) && L > L0 && kl <= cfg_.kl_limit) {
          accepted = true;
          stats_.last_actor_loss = -L;
          break;
        }
      }
      if (accepted) {
        ++stats_.actor_updates;
      } else {
        actor_.set_flat_parameters(theta0);
        ++stats_.skipped_updates;
      }
    }
    if (mean_kl(p.states, p.old_mean, p.old_log_std) > cfg_.kl_limit) break;
  }
}

}  // namespace climrl::rl
