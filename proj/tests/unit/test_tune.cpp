#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"
#include "climrl/tune/tuner.hpp"

using namespace climrl;
using namespace climrl::tune;
using rl::Algorithm;

namespace {

// Synthetic trial whose checkpoint values are level + k; the level comes
// from the trial id through `levels`.
TrialFn curve_trial(std::vector<double> levels, long budget = 1000, int checkpoints = 4) {
  return [levels, budget, checkpoints](Trial& t, const ReportFn& report) {
    const double level = levels.at(static_cast<std::size_t>(t.id));
    for (int k = 0; k < checkpoints; ++k) {
      const long used = budget * (k + 1) / (checkpoints + 1);
      t.steps_used = used;
      if (!report(k, level + k, used)) return 0.0;
    }
    t.steps_used = budget;
    return level + checkpoints;
  };
}

}  // namespace

TEST(SearchSpace, CountsMatchTunableTable) {
  EXPECT_EQ(search_space(Algorithm::reinforce).params.size(), 2u);
  EXPECT_EQ(search_space(Algorithm::ddpg).params.size(), 7u);
  EXPECT_EQ(search_space(Algorithm::dpg).params.size(), 4u);
  EXPECT_EQ(search_space(Algorithm::td3).params.size(), 8u);
  EXPECT_EQ(search_space(Algorithm::ppo).params.size(), 6u);
  EXPECT_EQ(search_space(Algorithm::trpo).params.size(), 6u);
  EXPECT_EQ(search_space(Algorithm::sac).params.size(), 9u);
  EXPECT_EQ(search_space(Algorithm::tqc).params.size(), 10u);
}

TEST(SearchSpace, SamplesStayInRangeAndOnlyCoverTunables) {
  RngStream rng(4);
  for (Algorithm a : rl::all_algorithms()) {
    const SearchSpace space = search_space(a);
    for (int i = 0; i < 200; ++i) {
      const ParamSample s = sample_config(space, rng);
      ASSERT_EQ(s.size(), rl::tunable_names(a).size());
      for (const ParamRange& p : space.params) {
        const double v = s.at(p.name);
        if (p.kind == ParamKind::categorical) {
          EXPECT_NE(std::find(p.choices.begin(), p.choices.end(), v), p.choices.end());
        } else {
          EXPECT_GE(v, p.low);
          EXPECT_LE(v, p.high);
        }
        if (p.kind == ParamKind::integer) {
          EXPECT_EQ(v, std::floor(v));
        }
      }
      EXPECT_NO_THROW(apply_sample(rl::default_config(a), s));
    }
  }
}

TEST(SearchSpace, SeededSamplingIsReproducible) {
  RngStream a(17), b(17);
  const SearchSpace space = search_space(Algorithm::tqc);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_config(space, a), sample_config(space, b));
}

TEST(Study, SingleTrialIsBestAndNeverPruned) {
  StudyOptions opt;
  opt.n_trials = 1;
  const StudyResult r = run_study(search_space(Algorithm::ddpg), curve_trial({-5.0}), opt);
  EXPECT_EQ(r.best, 0);
  EXPECT_EQ(r.best_trial().status, TrialStatus::complete);
  EXPECT_EQ(r.best_trial().checkpoints.size(), 4u);
  EXPECT_DOUBLE_EQ(r.best_trial().score, -1.0);
}

TEST(Study, DominatedTrialIsPrunedEarly) {
  StudyOptions opt;
  opt.n_trials = 2;
  const StudyResult seq = run_study(search_space(Algorithm::ddpg), curve_trial({0.0, -10.0}), opt);
  EXPECT_EQ(seq.trials[1].status, TrialStatus::pruned);
  EXPECT_LE(seq.trials[1].pruned_at, 1);
  EXPECT_EQ(seq.best, 0);
  opt.workers = 2;
  for (const auto& levels : {std::vector<double>{0.0, -10.0}, std::vector<double>{-10.0, 0.0}}) {
    const StudyResult par = run_study(search_space(Algorithm::ddpg), curve_trial(levels), opt);
    const int loser = levels[0] < levels[1] ? 0 : 1;
    EXPECT_EQ(par.trials[static_cast<std::size_t>(loser)].status, TrialStatus::pruned);
    EXPECT_LE(par.trials[static_cast<std::size_t>(loser)].pruned_at, 1);
    EXPECT_EQ(par.best, 1 - loser);
  }
}

TEST(Study, IncumbentIsNeverPrunedAndPruningSavesSteps) {
  RngStream rng(3);
  std::vector<double> levels;
  for (int i = 0; i < 12; ++i) levels.push_back(rng.uniform(-10, 0));
  for (int workers : {1, 3}) {
    StudyOptions opt;
    opt.n_trials = 12;
    opt.workers = workers;
    const StudyResult r = run_study(search_space(Algorithm::td3), curve_trial(levels), opt);
    const double best_level = *std::max_element(levels.begin(), levels.end());
    const auto best_it = std::find(levels.begin(), levels.end(), best_level);
    EXPECT_EQ(r.best, static_cast<int>(best_it - levels.begin()));
    EXPECT_EQ(r.best_trial().status, TrialStatus::complete);
    int pruned = 0;
    for (const Trial& t : r.trials) {
      if (t.status == TrialStatus::pruned) {
        ++pruned;
        EXPECT_EQ(static_cast<int>(t.checkpoints.size()), t.pruned_at + 1);
      }
    }
    EXPECT_GT(pruned, 0);
    EXPECT_LT(r.total_steps(), 12L * 1000);
  }
}

TEST(Study, DeterministicForSeedAndWorkers) {
  RngStream rng(8);
  std::vector<double> levels;
  for (int i = 0; i < 9; ++i) levels.push_back(rng.uniform(-1, 0));
  for (int workers : {1, 2}) {
    StudyOptions opt;
    opt.n_trials = 9;
    opt.workers = workers;
    opt.seed = 5;
    const StudyResult a = run_study(search_space(Algorithm::sac), curve_trial(levels), opt);
    const StudyResult b = run_study(search_space(Algorithm::sac), curve_trial(levels), opt);
    EXPECT_EQ(trials_csv(a), trials_csv(b));
  }
}

TEST(Study, FailedTrialsAreMarkedAndStudyContinues) {
  TrialFn fn = [](Trial& t, const ReportFn& report) {
    if (t.id == 1) throw NonFiniteError("loss diverged");
    for (int k = 0; k < 4; ++k) {
      if (!report(k, -1.0, k)) return 0.0;
    }
    return -1.0;
  };
  StudyOptions opt;
  opt.n_trials = 3;
  opt.workers = 3;
  const StudyResult r = run_study(search_space(Algorithm::ppo), fn, opt);
  EXPECT_EQ(r.trials[1].status, TrialStatus::failed);
  EXPECT_NE(r.trials[1].error.find("diverged"), std::string::npos);
  EXPECT_EQ(r.trials[0].status, TrialStatus::complete);
  EXPECT_EQ(r.trials[2].status, TrialStatus::complete);

  TrialFn always = [](Trial&, const ReportFn&) -> double { throw Error("boom"); };
  EXPECT_THROW(run_study(search_space(Algorithm::ppo), always, opt), Error);
  opt.n_trials = 0;
  EXPECT_THROW(run_study(search_space(Algorithm::ppo), fn, opt), ConfigError);
}

TEST(Study, RlStudyWritesAConsumableFragment) {
  eval::RunConfig cfg;
  const auto spec = eval::parse_experiment("v0-optim-L");
  StudyOptions opt;
  opt.n_trials = 3;
  RlStudySettings settings;
  settings.steps = 1000;
  const StudyResult r = run_rl_study(Algorithm::reinforce, spec, cfg, opt, settings);
  EXPECT_GE(r.best, 0);
  EXPECT_LE(r.total_steps(), 3L * 1000);
  const std::string fragment = study_fragment(Algorithm::reinforce, spec.env_tag, r);
  EXPECT_EQ(fragment.rfind("[tuned.v0.reinforce]", 0), 0u);
  const eval::RunConfig tuned = eval::parse_run_config(fragment);
  const rl::AlgoConfig c = eval::make_algo_config(Algorithm::reinforce, spec, tuned);
  EXPECT_EQ(c.actor_critic_layer_size,
            static_cast<int>(r.best_trial().params.at("actor_critic_layer_size")));
  EXPECT_NEAR(c.learning_rate, r.best_trial().params.at("learning_rate"), 1e-9 * c.learning_rate);
}
