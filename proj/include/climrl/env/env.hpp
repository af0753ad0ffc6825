#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "climrl/rng.hpp"

namespace climrl::env {

struct BoxSpace {
  std::vector<double> low;
  std::vector<double> high;

  BoxSpace() = default;
  BoxSpace(std::vector<double> lo, std::vector<double> hi);

  std::size_t size() const { return low.size(); }
  bool contains(std::span<const double> x) const;
  std::vector<double> clip(std::span<const double> x) const;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  std::map<std::string, std::vector<double>> info;
};

// Truncation-only episodic environment. step() validates the action length,
// clips it into the action box, enforces the step cap and delegates to
// advance().
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual const BoxSpace& observation_space() const = 0;
  virtual const BoxSpace& action_space() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  std::vector<double> reset(std::uint64_t seed);
  StepResult step(std::span<const double> action);

  int max_steps() const { return max_steps_; }
  // Steps taken in the current episode.
  int step_index() const { return steps_; }
  bool needs_reset() const { return needs_reset_; }

 protected:
  explicit Env(int max_steps);

  virtual std::vector<double> reset_state() = 0;
  // Called with a clipped action; step_index() already counts this step and
  // last_step is true on the truncating step.
  virtual StepResult advance(const std::vector<double>& action, bool last_step) = 0;

  RngStream& rng() { return rng_; }

 private:
  int max_steps_;
  int steps_ = 0;
  bool needs_reset_ = true;
  RngStream rng_;
};

}  // namespace climrl::env
