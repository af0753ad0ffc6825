#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "climrl/nn/tensor.hpp"
#include "climrl/rng.hpp"

namespace climrl::rl {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

struct Minibatch {
  nn::Tensor s;       // B x obs
  nn::Tensor a;       // B x act
  nn::Tensor r;       // B x 1
  nn::Tensor s_next;  // B x obs
  nn::Tensor done;    // B x 1, 0 or 1
  std::vector<std::size_t> indices;
};

// Fixed-capacity ring buffer; the oldest transition is overwritten when full.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim,
               std::uint64_t seed);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // Logical index 0 is the oldest stored transition.
  Transition at(std::size_t i) const;

  // B distinct slots drawn uniformly from the current contents.
  Minibatch sample(std::size_t batch_size);

 private:
  std::size_t slot(std::size_t logical) const;

  std::size_t capacity_, obs_dim_, act_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<double> s_, a_, r_, s_next_, done_;
  RngStream rng_;
};

// Steps of one or more complete episodes, in collection order.
struct TrajectoryBatch {
  std::vector<Transition> steps;
  std::vector<std::size_t> episode_starts;
  std::vector<double> values;     // V(s_t) per step
  std::vector<double> log_probs;  // log pi_old(a_t | s_t)
  std::vector<double> returns;
  std::vector<double> advantages;
  bool has_advantages = false;

  std::size_t size() const { return steps.size(); }
  void clear();
  void begin_episode() { episode_starts.push_back(steps.size()); }
};

// returns[t] = sum_{k>=t} gamma^{k-t} r_k
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// `values` has one more entry than `rewards`: the bootstrap value after the
// last step.
GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              const std::vector<bool>& dones, double gamma, double lambda);

// Zero mean, unit variance (population), in place. Leaves constant vectors
// centred only.
void normalize_advantages(std::vector<double>& adv);

}  // namespace climrl::rl
