#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "climrl/eval/experiments.hpp"
#include "climrl/nn/mlp.hpp"
#include "climrl/record.hpp"

namespace climrl::eval {

struct SuiteTask {
  rl::Algorithm algorithm = rl::Algorithm::ddpg;
  std::uint64_t seed = 1;
};

struct SuiteResult {
  SuiteTask task;
  RunRecord record;
  nn::Mlp policy;     // final acting network
  std::string error;  // set when the task threw; record is then empty
  bool ok() const { return error.empty(); }
};

struct SuiteOptions {
  int workers = 1;
  long steps = 0;  // 0 uses the experiment budget
  // Called from worker threads after each task; must be thread-safe.
  std::function<void(const SuiteResult&)> on_result;
};

// One run per (algorithm, seed), algorithms outermost. Tasks run on up to
// `workers` OpenMP threads; results are returned in task order and do not
// depend on the worker count.
std::vector<SuiteResult> run_experiment_suite(const ExperimentSpec& spec, const RunConfig& cfg,
                                              const std::vector<rl::Algorithm>& algorithms,
                                              const std::vector<std::uint64_t>& seeds,
                                              const SuiteOptions& opt = {});

// Single task; exceptions propagate.
SuiteResult run_single(const ExperimentSpec& spec, const RunConfig& cfg, const SuiteTask& task,
                       long steps);

}  // namespace climrl::eval
