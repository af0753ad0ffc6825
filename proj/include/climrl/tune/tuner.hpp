#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "climrl/eval/experiments.hpp"
#include "climrl/rl/config.hpp"
#include "climrl/rng.hpp"

namespace climrl::tune {

enum class ParamKind { log_uniform, uniform, integer, categorical };

struct ParamRange {
  std::string name;
  ParamKind kind = ParamKind::uniform;
  double low = 0.0;
  double high = 0.0;
  std::vector<double> choices;  // categorical only
};

struct SearchSpace {
  rl::Algorithm algorithm = rl::Algorithm::ddpg;
  std::vector<ParamRange> params;  // one per tunable, in canonical order
};

SearchSpace search_space(rl::Algorithm a);

using ParamSample = std::map<std::string, double>;

// Draws every tunable of the space, nothing else.
ParamSample sample_config(const SearchSpace& space, RngStream& rng);
rl::AlgoConfig apply_sample(rl::AlgoConfig base, const ParamSample& sample);

enum class TrialStatus { running, pruned, complete, failed };
std::string to_string(TrialStatus s);

struct Trial {
  int id = 0;
  ParamSample params;
  std::vector<double> checkpoints;  // interim values reported so far
  TrialStatus status = TrialStatus::running;
  int pruned_at = -1;  // checkpoint index that triggered pruning
  double score = 0.0;  // complete trials only
  long steps_used = 0;
  std::string error;
};

// Interim report from inside a trial. Returns false when the trial has been
// pruned and must stop.
using ReportFn = std::function<bool(int checkpoint, double value, long steps_used)>;
// Runs one trial and returns its final score; may update trial.steps_used.
// Throwing marks the trial failed without stopping the study.
using TrialFn = std::function<double(Trial& trial, const ReportFn& report)>;

struct StudyOptions {
  int n_trials = 32;
  int workers = 1;
  int checkpoints = 4;  // interim reports at 20, 40, 60 and 80% of the budget
  std::uint64_t seed = 1;
};

struct StudyResult {
  std::vector<Trial> trials;
  int best = -1;  // index into trials
  const Trial& best_trial() const { return trials.at(static_cast<std::size_t>(best)); }
  long total_steps() const;
};

// Trials run in waves of `workers` threads that meet at every checkpoint. A
// trial is pruned when its value is strictly below the median of every value
// reported at that checkpoint so far (earlier waves and the current one).
// Results depend only on the seed and worker count. Throws Error when no
// trial completes.
StudyResult run_study(const SearchSpace& space, const TrialFn& fn, const StudyOptions& opt);

struct RlStudySettings {
  long steps = 0;  // 0 uses the experiment budget
  std::uint64_t train_seed = 1;
};

// Trains each sampled configuration on the experiment's environment. Interim
// values are the mean return of the episodes in the latest budget segment;
// the score is the mean return of episodes ending in the final 10% of steps.
StudyResult run_rl_study(rl::Algorithm a, const eval::ExperimentSpec& spec,
                         const eval::RunConfig& cfg, const StudyOptions& opt,
                         const RlStudySettings& settings = {});

// [tuned.<env>.<algo>] fragment with the best trial's parameters.
std::string study_fragment(rl::Algorithm a, const std::string& env_tag, const StudyResult& r);
std::string trials_csv(const StudyResult& r);

}  // namespace climrl::tune
