#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "climrl/env/env.hpp"
#include "climrl/eval/metrics.hpp"
#include "climrl/rl/config.hpp"

namespace climrl::eval {

struct Budgets {
  long ideal_biascorr = 60000;
  long ideal_rce = 10000;
  long realistic_biascorr = 20000;
  long realistic_rce = 4000;
};

// Config file (INI):
//   [env]                 environment overrides, e.g. T_physics = 323.75,
//                         observed_profile = path/to/profile.csv
//   [budget]              ideal_biascorr, ideal_rce, realistic_biascorr,
//                         realistic_rce
//   [algo.<name>]         parameter overrides for every experiment
//   [tuned.<env>.<name>]  tuned values used by <env>-optim-L experiments,
//                         <env> one of v0, v1, v2, rce-v0
// Unknown sections or keys raise ConfigError.
struct RunConfig {
  std::map<std::string, std::string> env_overrides;
  Budgets budgets;
  std::map<rl::Algorithm, std::map<std::string, std::string>> algo_overrides;
  std::map<std::string, std::map<rl::Algorithm, std::map<std::string, std::string>>> tuned;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin = "<memory>");
RunConfig load_run_config(const std::filesystem::path& path);
// Appends `other` on top of `base`; later values win.
void merge_run_config(RunConfig& base, const RunConfig& other);

struct ExperimentSpec {
  std::string id;
  EnvKind env = EnvKind::biascorr_v0;
  std::string env_tag;  // v0, v1, v2, rce-v0
  bool optimised_layers = false;
  bool ideal_compute = false;
};

// The 16 experiment ids in canonical order.
const std::vector<std::string>& experiment_ids();
// Throws ConfigError for ids outside the table.
ExperimentSpec parse_experiment(const std::string& id);
std::string env_tag(EnvKind k);

long step_budget(const ExperimentSpec& spec, const Budgets& budgets);
double experiment_threshold(const ExperimentSpec& spec);
// Thresholds for every experiment id, for rank_algorithms.
std::map<std::string, double> experiment_thresholds();

std::unique_ptr<env::Env> make_env(EnvKind kind, const std::map<std::string, std::string>& overrides);
std::unique_ptr<env::Env> make_env(const ExperimentSpec& spec, const RunConfig& cfg);

// Defaults, then [algo.<name>], then tuned values for optim-L experiments;
// homo-64L experiments force actor_critic_layer_size = 64.
rl::AlgoConfig make_algo_config(rl::Algorithm a, const ExperimentSpec& spec, const RunConfig& cfg);

}  // namespace climrl::eval
