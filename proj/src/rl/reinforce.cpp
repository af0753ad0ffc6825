#include <cmath>

#include "climrl/error.hpp"
#include "climrl/rl/algos.hpp"
#include "climrl/rl/distributions.hpp"

namespace climrl::rl {

ReinforceAgent::ReinforceAgent(const AlgoConfig& cfg, std::size_t obs_dim, std::size_t act_dim,
                               std::uint64_t seed)
    : Agent(cfg, obs_dim, act_dim, seed),
      policy_(actor_spec(nn::HeadKind::gaussian), init_rng_),
      opt_(nn::OptimizerKind::adam, cfg_.learning_rate, policy_.parameters()) {}

std::vector<double> ReinforceAgent::act(std::span<const double> obs, bool explore) {
  const nn::Tensor mu = policy_.predict(nn::Tensor::row(obs));
  std::vector<double> a(mu.values().begin(), mu.values().end());
  if (explore) {
    const std::vector<double> ls = policy_.log_std_values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += std::exp(ls[i]) * noise_rng_.normal();
    last_raw_ = a;
  }
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

void ReinforceAgent::observe(const Transition& t, long) {
  states_.push_back(t.s);
  actions_.push_back(last_raw_);
  rewards_.push_back(t.r);
}

double ReinforceAgent::loss_and_grad(const nn::Tensor& states, const nn::Tensor& actions,
                                     const std::vector<double>& returns) {
  policy_.zero_grad();
  nn::Tape tape;
  nn::Var mu = policy_.forward(tape, tape.frozen(states));
  nn::Var lp = gaussian_log_prob(tape.frozen(actions), mu, policy_.log_std(tape));
  nn::Tensor g = nn::Tensor::matrix(returns.size(), 1);
  std::copy(returns.begin(), returns.end(), g.data());
  nn::Var loss = neg(mean(mul(lp, tape.constant(std::move(g)))));
  const double l = loss.value().item();
  check_loss(l, "REINFORCE loss");
  tape.backward(loss);
  return l;
}

void ReinforceAgent::end_episode(std::span<const double>, bool) {
  if (rewards_.empty()) return;
  const std::vector<double> G = discounted_returns(rewards_, cfg_.gamma);
  stats_.last_actor_loss = loss_and_grad(stack_rows(states_), stack_rows(actions_), G);
  opt_.step();
  ++stats_.actor_updates;
  states_.clear();
  actions_.clear();
  rewards_.clear();
}

}  // namespace climrl::rl
