#include "climrl/rl/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "climrl/error.hpp"

namespace climrl::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim,
                           std::uint64_t seed)
    : capacity_(capacity),
      obs_dim_(obs_dim),
      act_dim_(act_dim),
      s_(capacity * obs_dim),
      a_(capacity * act_dim),
      r_(capacity),
      s_next_(capacity * obs_dim),
      done_(capacity),
      rng_(seed) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.s.size() != obs_dim_ || t.s_next.size() != obs_dim_ || t.a.size() != act_dim_) {
    throw ShapeError("transition does not match the buffer's dimensions");
  }
  const std::size_t k = next_;
  std::copy(t.s.begin(), t.s.end(), s_.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_));
  std::copy(t.a.begin(), t.a.end(), a_.begin() + static_cast<std::ptrdiff_t>(k * act_dim_));
  std::copy(t.s_next.begin(), t.s_next.end(),
            s_next_.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_));
  r_[k] = t.r;
  done_[k] = t.done ? 1.0 : 0.0;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::slot(std::size_t logical) const {
  const std::size_t oldest = size_ < capacity_ ? 0 : next_;
  return (oldest + logical) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ShapeError("replay index out of range");
  const std::size_t k = slot(i);
  Transition t;
  t.s.assign(s_.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_),
             s_.begin() + static_cast<std::ptrdiff_t>((k + 1) * obs_dim_));
  t.a.assign(a_.begin() + static_cast<std::ptrdiff_t>(k * act_dim_),
             a_.begin() + static_cast<std::ptrdiff_t>((k + 1) * act_dim_));
  t.s_next.assign(s_next_.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_),
                  s_next_.begin() + static_cast<std::ptrdiff_t>((k + 1) * obs_dim_));
  t.r = r_[k];
  t.done = done_[k] != 0.0;
  return t;
}

Minibatch ReplayBuffer::sample(std::size_t batch_size) {
  if (batch_size == 0 || batch_size > size_) {
    throw Error("cannot sample " + std::to_string(batch_size) + " transitions from a buffer of " +
                std::to_string(size_));
  }
  // Floyd's algorithm: B distinct indices from [0, size).
  std::vector<std::size_t> picked;
  picked.reserve(batch_size);
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = size_ - batch_size; j < size_; ++j) {
    const std::size_t t = rng_.uniform_int(j + 1);
    if (seen.insert(t).second) {
      picked.push_back(t);
    } else {
      seen.insert(j);
      picked.push_back(j);
    }
  }
  Minibatch mb;
  mb.s = nn::Tensor::matrix(batch_size, obs_dim_);
  mb.a = nn::Tensor::matrix(batch_size, act_dim_);
  mb.r = nn::Tensor::matrix(batch_size, 1);
  mb.s_next = nn::Tensor::matrix(batch_size, obs_dim_);
  mb.done = nn::Tensor::matrix(batch_size, 1);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t k = slot(picked[b]);
    std::copy_n(s_.data() + k * obs_dim_, obs_dim_, mb.s.data() + b * obs_dim_);
    std::copy_n(a_.data() + k * act_dim_, act_dim_, mb.a.data() + b * act_dim_);
    std::copy_n(s_next_.data() + k * obs_dim_, obs_dim_, mb.s_next.data() + b * obs_dim_);
    mb.r[b] = r_[k];
    mb.done[b] = done_[k];
  }
  mb.indices = std::move(picked);
  return mb;
}

void TrajectoryBatch::clear() {
  steps.clear();
  episode_starts.clear();
  values.clear();
  log_probs.clear();
  returns.clear();
  advantages.clear();
  has_advantages = false;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  std::vector<double> out(rewards.size());
  double g = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    g = rewards[t] + gamma * g;
    out[t] = g;
  }
  return out;
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              const std::vector<bool>& dones, double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1) {
    throw ShapeError("gae: values needs " + std::to_string(T + 1) + " entries, got " +
                     std::to_string(values.size()));
  }
  if (dones.size() != T) throw ShapeError("gae: dones length differs from rewards");
  GaeResult out;
  out.advantages.resize(T);
  out.returns.resize(T);
  double next_adv = 0.0;
  for (std::size_t t = T; t-- > 0;) {
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * nonterminal * values[t + 1] - values[t];
    next_adv = delta + gamma * lambda * nonterminal * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
  }
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double sd = std::sqrt(var);
  for (double& a : adv) a = (a - mean) / (sd + 1e-8);
}

}  // namespace climrl::rl
