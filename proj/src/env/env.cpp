#include "climrl/env/env.hpp"

#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"

namespace climrl::env {

BoxSpace::BoxSpace(std::vector<double> lo, std::vector<double> hi)
    : low(std::move(lo)), high(std::move(hi)) {
  if (low.size() != high.size()) throw ShapeError("box bounds differ in length");
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!(low[i] < high[i])) throw ConfigError("box bound low must be < high");
  }
}

bool BoxSpace::contains(std::span<const double> x) const {
  if (x.size() != size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= low[i] && x[i] <= high[i])) return false;
  }
  return true;
}

std::vector<double> BoxSpace::clip(std::span<const double> x) const {
  if (x.size() != size()) {
    throw ShapeError("expected " + std::to_string(size()) + " values, got " +
                     std::to_string(x.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) throw NonFiniteError("NaN action component");
    out[i] = std::clamp(x[i], low[i], high[i]);
  }
  return out;
}

Env::Env(int max_steps) : max_steps_(max_steps) {
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
}

std::vector<double> Env::reset(std::uint64_t seed) {
  rng_ = RngStream(seed);
  steps_ = 0;
  needs_reset_ = false;
  return reset_state();
}

StepResult Env::step(std::span<const double> action) {
  if (needs_reset_) throw Error(name() + ": step() called after truncation without reset()");
  const std::vector<double> a = action_space().clip(action);
  ++steps_;
  const bool last = steps_ >= max_steps_;
  StepResult r = advance(a, last);
  r.terminated = false;
  r.truncated = last;
  if (last) needs_reset_ = true;
  return r;
}

}  // namespace climrl::env
