#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace climrl {

struct EpisodePoint {
  long global_step = 0;
  double episodic_return = 0.0;
};

// Episodic returns of one (experiment, algorithm, seed) run.
struct RunRecord {
  std::string experiment_id;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<EpisodePoint> points;
  double wall_time = 0.0;  // seconds
  std::string config_digest;
  // "complete", "stopped" (hook requested stop) or "nonfinite: <diagnostic>".
  std::string status = "complete";
  long total_steps = 0;
};

}  // namespace climrl
