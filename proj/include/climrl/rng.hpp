#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace climrl {

// xoshiro256** seeded through splitmix64. Every draw is defined in terms of
// integer arithmetic plus libm log/sqrt/cos, so identical seeds give identical
// sequences on any IEEE-754 platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  // Number of 64-bit words drawn so far.
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double low, double high);
  // Uniform integer in [0, n). Unbiased (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev);

  // Independent child stream, derived deterministically from this one.
  RngStream split();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace climrl
