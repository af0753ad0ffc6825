#include "climrl/eval/suite.hpp"

#include <omp.h>

#include "climrl/error.hpp"
#include "climrl/rl/agent.hpp"

namespace climrl::eval {

SuiteResult run_single(const ExperimentSpec& spec, const RunConfig& cfg, const SuiteTask& task,
                       long steps) {
  auto env = make_env(spec, cfg);
  const rl::AlgoConfig algo = make_algo_config(task.algorithm, spec, cfg);
  rl::SpaceScaler scaler(env->observation_space(), env->action_space());
  auto agent = rl::make_agent(algo, scaler.obs_dim(), scaler.act_dim(), task.seed);
  rl::TrainOptions opt;
  opt.experiment_id = spec.id;
  opt.seed = task.seed;
  opt.total_steps = steps > 0 ? steps : step_budget(spec, cfg.budgets);
  SuiteResult r;
  r.task = task;
  r.record = rl::train(*env, *agent, scaler, opt);
  r.policy = agent->policy();
  return r;
}

std::vector<SuiteResult> run_experiment_suite(const ExperimentSpec& spec, const RunConfig& cfg,
                                              const std::vector<rl::Algorithm>& algorithms,
                                              const std::vector<std::uint64_t>& seeds,
                                              const SuiteOptions& opt) {
  if (algorithms.empty() || seeds.empty()) throw ConfigError("suite needs at least one algorithm and seed");
  if (opt.workers < 1) throw ConfigError("workers must be >= 1");
  std::vector<SuiteTask> tasks;
  for (rl::Algorithm a : algorithms) {
    for (std::uint64_t s : seeds) tasks.push_back({a, s});
  }
  // Fail fast on configuration problems before any thread starts.
  for (rl::Algorithm a : algorithms) make_algo_config(a, spec, cfg);
  make_env(spec, cfg);

  std::vector<SuiteResult> results(tasks.size());
  const long n = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(opt.workers)
  for (long i = 0; i < n; ++i) {
    SuiteResult& r = results[static_cast<std::size_t>(i)];
    try {
      r = run_single(spec, cfg, tasks[static_cast<std::size_t>(i)], opt.steps);
    } catch (const std::exception& e) {
      r.task = tasks[static_cast<std::size_t>(i)];
      r.error = e.what();
    }
    if (opt.on_result) opt.on_result(r);
  }
  return results;
}

}  // namespace climrl::eval
