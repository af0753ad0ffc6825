#include "climrl/rl/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "climrl/error.hpp"
#include "climrl/rl/algos.hpp"

namespace climrl::rl {

SpaceScaler::SpaceScaler(env::BoxSpace obs, env::BoxSpace act)
    : obs_(std::move(obs)), act_(std::move(act)) {}

std::vector<double> SpaceScaler::observation(std::span<const double> obs) const {
  if (obs.size() != obs_.size()) throw ShapeError("observation length mismatch");
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out[i] = 2.0 * (obs[i] - obs_.low[i]) / (obs_.high[i] - obs_.low[i]) - 1.0;
  }
  return out;
}

std::vector<double> SpaceScaler::action_to_env(std::span<const double> a) const {
  if (a.size() != act_.size()) throw ShapeError("action length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i])) throw NonFiniteError("non-finite action from the agent");
    const double x = std::clamp(a[i], -1.0, 1.0);
    const double half = 0.5 * (act_.high[i] - act_.low[i]);
    const double center = 0.5 * (act_.high[i] + act_.low[i]);
    out[i] = center + half * x;
  }
  return out;
}

std::vector<double> SpaceScaler::action_from_env(std::span<const double> a) const {
  if (a.size() != act_.size()) throw ShapeError("action length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double half = 0.5 * (act_.high[i] - act_.low[i]);
    const double center = 0.5 * (act_.high[i] + act_.low[i]);
    out[i] = (a[i] - center) / half;
  }
  return out;
}

Agent::Agent(AlgoConfig cfg, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed)
    : cfg_(std::move(cfg)), obs_dim_(obs_dim), act_dim_(act_dim), init_rng_(seed) {
  validate(cfg_);
  noise_rng_ = init_rng_.split();
  buffer_seed_ = init_rng_.split().next_u64();
}

nn::MlpSpec Agent::actor_spec(nn::HeadKind head) const {
  nn::MlpSpec s;
  s.layer_sizes.push_back(obs_dim_);
  for (int i = 0; i < cfg_.hidden_layers; ++i) {
    s.layer_sizes.push_back(static_cast<std::size_t>(cfg_.actor_critic_layer_size));
  }
  s.layer_sizes.push_back(act_dim_);
  s.activation = cfg_.activation;
  s.head = head;
  if (head == nn::HeadKind::tanh_scaled) {
    s.low.assign(act_dim_, -1.0);
    s.high.assign(act_dim_, 1.0);
  }
  s.final_layer_scale = cfg_.final_layer_scale;
  s.log_std_init = cfg_.log_std_init;
  return s;
}

nn::MlpSpec Agent::critic_spec(std::size_t inputs, std::size_t outputs) const {
  nn::MlpSpec s;
  s.layer_sizes.push_back(inputs);
  for (int i = 0; i < cfg_.hidden_layers; ++i) {
    s.layer_sizes.push_back(static_cast<std::size_t>(cfg_.actor_critic_layer_size));
  }
  s.layer_sizes.push_back(outputs);
  s.activation = cfg_.activation;
  s.head = nn::HeadKind::linear;
  return s;
}

void Agent::check_loss(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite ") + what);
}

std::unique_ptr<Agent> make_agent(const AlgoConfig& cfg, std::size_t obs_dim,
                                  std::size_t act_dim, std::uint64_t seed) {
  switch (cfg.algorithm) {
    case Algorithm::reinforce:
      return std::make_unique<ReinforceAgent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::dpg:
      return std::make_unique<DpgAgent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::ddpg:
      return std::make_unique<DdpgAgent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::td3:
      return std::make_unique<Td3Agent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::ppo:
      return std::make_unique<PpoAgent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::trpo:
      return std::make_unique<TrpoAgent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::sac:
      return std::make_unique<SacAgent>(cfg, obs_dim, act_dim, seed);
    case Algorithm::tqc:
      return std::make_unique<TqcAgent>(cfg, obs_dim, act_dim, seed);
  }
  throw ConfigError("unknown algorithm");
}

RunRecord train(env::Env& env, Agent& agent, const SpaceScaler& scaler, const TrainOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.experiment_id = opt.experiment_id;
  rec.algorithm = to_string(agent.config().algorithm);
  rec.seed = opt.seed;
  rec.config_digest = std::to_string(fnv1a64(canonical_text(agent.config())));

  const double scale = agent.config().reward_scale;
  std::vector<double> obs = scaler.observation(env.reset(opt.seed));
  double ep_return = 0.0;
  long step = 0;
  try {
    for (step = 1; step <= opt.total_steps; ++step) {
      std::vector<double> a = agent.act(obs, true);
      const env::StepResult r = env.step(scaler.action_to_env(a));
      if (!std::isfinite(r.reward)) throw NonFiniteError("non-finite reward from the environment");
      Transition tr;
      tr.s = obs;
      tr.a = std::move(a);
      tr.r = r.reward * scale;
      tr.s_next = scaler.observation(r.observation);
      tr.done = r.terminated;
      ep_return += r.reward;
      obs = tr.s_next;
      agent.observe(tr, step);
      if (r.terminated || r.truncated) {
        agent.end_episode(obs, r.terminated);
        rec.points.push_back({step, ep_return});
        ep_return = 0.0;
        obs = scaler.observation(env.reset(opt.seed));
        if (opt.on_episode && !opt.on_episode(rec)) {
          rec.status = "stopped";
          break;
        }
      }
    }
  } catch (const NonFiniteError& e) {
    rec.status = std::string("nonfinite: ") + e.what();
  }
  rec.total_steps = std::min(step, opt.total_steps);
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

EpisodeTrace run_episode(env::Env& env, Agent& agent, const SpaceScaler& scaler, bool explore,
                         std::uint64_t seed) {
  EpisodeTrace tr;
  std::vector<double> raw = env.reset(seed);
  for (;;) {
    const std::vector<double> a = scaler.action_to_env(agent.act(scaler.observation(raw), explore));
    env::StepResult r = env.step(a);
    tr.observations.push_back(raw);
    tr.actions.push_back(a);
    tr.rewards.push_back(r.reward);
    tr.episodic_return += r.reward;
    raw = r.observation;
    const bool end = r.terminated || r.truncated;
    tr.steps.push_back(std::move(r));
    if (end) break;
  }
  return tr;
}

std::vector<double> greedy_action(Algorithm algorithm, const nn::Mlp& policy,
                                  std::span<const double> obs) {
  const nn::Tensor out = policy.predict(nn::Tensor::row(obs));
  std::vector<double> a(out.values().begin(), out.values().end());
  const bool squashed = algorithm == Algorithm::sac || algorithm == Algorithm::tqc;
  for (double& v : a) v = squashed ? std::tanh(v) : std::clamp(v, -1.0, 1.0);
  return a;
}

EpisodeTrace run_policy_episode(env::Env& env, Algorithm algorithm, const nn::Mlp& policy,
                                const SpaceScaler& scaler, std::uint64_t seed, double noise_sd) {
  EpisodeTrace tr;
  std::uint64_t noise_state = seed;
  RngStream noise(splitmix64(noise_state));
  std::vector<double> raw = env.reset(seed);
  for (;;) {
    std::vector<double> u = greedy_action(algorithm, policy, scaler.observation(raw));
    if (noise_sd > 0.0) {
      for (double& v : u) v += noise.normal(0.0, noise_sd);
    }
    const std::vector<double> a = scaler.action_to_env(u);
    env::StepResult r = env.step(a);
    tr.observations.push_back(raw);
    tr.actions.push_back(a);
    tr.rewards.push_back(r.reward);
    tr.episodic_return += r.reward;
    raw = r.observation;
    const bool end = r.terminated || r.truncated;
    tr.steps.push_back(std::move(r));
    if (end) break;
  }
  return tr;
}

nn::Tensor concat_cols(const nn::Tensor& a, const nn::Tensor& b) {
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row counts differ");
  nn::Tensor out = nn::Tensor::matrix(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
  }
  return out;
}

nn::Tensor stack_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  nn::Tensor out = nn::Tensor::matrix(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ShapeError("stack_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), out.data() + r * rows[0].size());
  }
  return out;
}

double critic_mse_step(nn::Mlp& critic, nn::Optimizer& opt, const nn::Tensor& inputs,
                       const nn::Tensor& targets) {
  opt.zero_grad();
  nn::Tape tape;
  nn::Var q = critic.forward(tape, tape.frozen(inputs));
  nn::Var loss = mean(square(sub(q, tape.frozen(targets))));
  const double l = loss.value().item();
  if (!std::isfinite(l)) throw NonFiniteError("non-finite critic loss");
  tape.backward(loss);
  opt.step();
  return l;
}

double actor_q_step(nn::Mlp& actor, nn::Optimizer& opt, nn::Mlp& critic, const nn::Tensor& s) {
  opt.zero_grad();
  nn::Tape tape;
  nn::Var sv = tape.frozen(s);
  nn::Var a = actor.forward(tape, sv);
  nn::Var q = critic.forward(tape, nn::concat_cols(sv, a), false);
  nn::Var loss = neg(mean(q));
  const double l = loss.value().item();
  if (!std::isfinite(l)) throw NonFiniteError("non-finite actor loss");
  tape.backward(loss);
  opt.step();
  return l;
}

}  // namespace climrl::rl
