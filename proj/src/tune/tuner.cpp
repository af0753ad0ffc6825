#include "climrl/tune/tuner.hpp"

#include <algorithm>
#include <barrier>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "climrl/error.hpp"
#include "climrl/rl/agent.hpp"

namespace climrl::tune {

namespace {

ParamRange range_for(const std::string& name) {
  if (name == "learning_rate" || name.ends_with("_lr")) {
    return {name, ParamKind::log_uniform, 1e-5, 1e-2, {}};
  }
  if (name == "actor_critic_layer_size") return {name, ParamKind::categorical, 0, 0, {16, 32, 64, 128, 256}};
  if (name == "batch_size") return {name, ParamKind::categorical, 0, 0, {64, 128, 256}};
  if (name == "tau") return {name, ParamKind::uniform, 0.001, 0.05, {}};
  if (name == "exploration_noise") return {name, ParamKind::uniform, 0.05, 0.5, {}};
  if (name == "policy_noise") return {name, ParamKind::uniform, 0.1, 0.5, {}};
  if (name == "noise_clip") return {name, ParamKind::uniform, 0.1, 0.7, {}};
  if (name == "clip_coef") return {name, ParamKind::uniform, 0.1, 0.4, {}};
  if (name == "max_grad_norm") return {name, ParamKind::uniform, 0.3, 2.0, {}};
  if (name == "alpha") return {name, ParamKind::uniform, 0.01, 0.5, {}};
  if (name == "policy_frequency" || name == "target_network_frequency") {
    return {name, ParamKind::integer, 1, 4, {}};
  }
  if (name == "num_minibatches") return {name, ParamKind::integer, 1, 8, {}};
  if (name == "update_epochs") return {name, ParamKind::integer, 1, 20, {}};
  if (name == "n_quantiles") return {name, ParamKind::integer, 5, 50, {}};
  if (name == "n_critics") return {name, ParamKind::integer, 1, 5, {}};
  throw ConfigError("no search range for '" + name + "'");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

SearchSpace search_space(rl::Algorithm a) {
  SearchSpace s;
  s.algorithm = a;
  for (const auto& name : rl::tunable_names(a)) s.params.push_back(range_for(name));
  return s;
}

ParamSample sample_config(const SearchSpace& space, RngStream& rng) {
  ParamSample out;
  for (const ParamRange& p : space.params) {
    switch (p.kind) {
      case ParamKind::log_uniform:
        out[p.name] = std::exp(rng.uniform(std::log(p.low), std::log(p.high)));
        break;
      case ParamKind::uniform:
        out[p.name] = rng.uniform(p.low, p.high);
        break;
      case ParamKind::integer: {
        const auto span = static_cast<std::uint64_t>(p.high - p.low) + 1;
        out[p.name] = p.low + static_cast<double>(rng.uniform_int(span));
        break;
      }
      case ParamKind::categorical:
        out[p.name] = p.choices[rng.uniform_int(p.choices.size())];
        break;
    }
  }
  return out;
}

rl::AlgoConfig apply_sample(rl::AlgoConfig base, const ParamSample& sample) {
  for (const auto& [k, v] : sample) rl::set_param(base, k, v);
  rl::validate(base);
  return base;
}

std::string to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::running:
      return "running";
    case TrialStatus::pruned:
      return "pruned";
    case TrialStatus::complete:
      return "complete";
    case TrialStatus::failed:
      return "failed";
  }
  return "?";
}

long StudyResult::total_steps() const {
  long s = 0;
  for (const Trial& t : trials) s += t.steps_used;
  return s;
}

StudyResult run_study(const SearchSpace& space, const TrialFn& fn, const StudyOptions& opt) {
  if (opt.n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (opt.workers < 1) throw ConfigError("workers must be >= 1");
  if (opt.checkpoints < 0) throw ConfigError("checkpoints must be >= 0");
  StudyResult result;
  RngStream rng(opt.seed);
  for (int i = 0; i < opt.n_trials; ++i) {
    Trial t;
    t.id = i;
    t.params = sample_config(space, rng);
    result.trials.push_back(std::move(t));
  }

  // Values reported at each checkpoint by finished waves.
  std::vector<std::vector<double>> history(static_cast<std::size_t>(opt.checkpoints));
  for (int first = 0; first < opt.n_trials; first += opt.workers) {
    const int count = std::min(opt.workers, opt.n_trials - first);
    std::vector<std::vector<double>> wave(static_cast<std::size_t>(opt.checkpoints));
    std::mutex mu;
    std::barrier sync(count);

    auto worker = [&](int index) {
      Trial& trial = result.trials[static_cast<std::size_t>(index)];
      int next = 0;
      ReportFn report = [&](int k, double value, long steps_used) {
        if (k != next || k >= opt.checkpoints) throw Error("trial reported checkpoint out of order");
        ++next;
        trial.steps_used = steps_used;
        trial.checkpoints.push_back(value);
        {
          std::lock_guard lock(mu);
          wave[static_cast<std::size_t>(k)].push_back(value);
        }
        sync.arrive_and_wait();
        std::vector<double> all;
        {
          std::lock_guard lock(mu);
          all = history[static_cast<std::size_t>(k)];
          all.insert(all.end(), wave[static_cast<std::size_t>(k)].begin(),
                     wave[static_cast<std::size_t>(k)].end());
        }
        if (value < median(all)) {
          trial.status = TrialStatus::pruned;
          trial.pruned_at = k;
          return false;
        }
        return true;
      };
      try {
        const double score = fn(trial, report);
        if (trial.status == TrialStatus::running) {
          if (next != opt.checkpoints) throw Error("trial finished without reporting every checkpoint");
          trial.score = score;
          trial.status = TrialStatus::complete;
        }
      } catch (const std::exception& e) {
        trial.status = TrialStatus::failed;
        trial.error = e.what();
      }
      sync.arrive_and_drop();
    };

    if (count == 1) {
      worker(first);
    } else {
      std::vector<std::thread> threads;
      for (int i = 0; i < count; ++i) threads.emplace_back(worker, first + i);
      for (auto& th : threads) th.join();
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      // Append in trial order so later medians do not depend on thread timing.
      for (int i = first; i < first + count; ++i) {
        const Trial& t = result.trials[static_cast<std::size_t>(i)];
        if (k < t.checkpoints.size()) history[k].push_back(t.checkpoints[k]);
      }
    }
  }

  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const Trial& t = result.trials[i];
    if (t.status != TrialStatus::complete) continue;
    if (result.best < 0 || t.score > result.trials[static_cast<std::size_t>(result.best)].score) {
      result.best = static_cast<int>(i);
    }
  }
  if (result.best < 0) {
    std::string why;
    for (const Trial& t : result.trials) {
      if (!t.error.empty()) {
        why = ": first failure: " + t.error;
        break;
      }
    }
    throw Error("no trial completed" + why);
  }
  return result;
}

StudyResult run_rl_study(rl::Algorithm a, const eval::ExperimentSpec& spec,
                         const eval::RunConfig& cfg, const StudyOptions& opt,
                         const RlStudySettings& settings) {
  const long budget = settings.steps > 0 ? settings.steps : eval::step_budget(spec, cfg.budgets);
  const rl::AlgoConfig base = eval::make_algo_config(a, spec, cfg);
  const int segments = opt.checkpoints + 1;

  TrialFn fn = [&](Trial& trial, const ReportFn& report) {
    rl::AlgoConfig algo = apply_sample(base, trial.params);
    auto env = eval::make_env(spec, cfg);
    rl::SpaceScaler scaler(env->observation_space(), env->action_space());
    auto agent = rl::make_agent(algo, scaler.obs_dim(), scaler.act_dim(), settings.train_seed);
    rl::TrainOptions t;
    t.experiment_id = spec.id;
    t.seed = settings.train_seed;
    t.total_steps = budget;
    int next = 0;
    std::size_t segment_start = 0;
    t.on_episode = [&](const RunRecord& rec) {
      const long step = rec.points.back().global_step;
      if (next < opt.checkpoints && step * segments >= budget * (next + 1)) {
        double s = 0.0;
        for (std::size_t i = segment_start; i < rec.points.size(); ++i) s += rec.points[i].episodic_return;
        const double value = s / static_cast<double>(rec.points.size() - segment_start);
        segment_start = rec.points.size();
        return report(next++, value, step);
      }
      return true;
    };
    RunRecord rec = rl::train(*env, *agent, scaler, t);
    if (rec.status.rfind("nonfinite", 0) == 0) throw NonFiniteError(rec.status);
    if (rec.points.empty()) throw Error("trial produced no episodes");
    trial.steps_used = rec.total_steps;
    if (trial.status == TrialStatus::pruned) return 0.0;
    const double cutoff = 0.9 * static_cast<double>(budget);
    double s = 0.0;
    int n = 0;
    for (const EpisodePoint& p : rec.points) {
      if (static_cast<double>(p.global_step) > cutoff) {
        s += p.episodic_return;
        ++n;
      }
    }
    if (n == 0) {
      s = rec.points.back().episodic_return;
      n = 1;
    }
    return s / n;
  };
  return run_study(search_space(a), fn, opt);
}

std::string study_fragment(rl::Algorithm a, const std::string& env_tag, const StudyResult& r) {
  std::string out = "[tuned." + env_tag + "." + rl::to_string(a) + "]\n";
  for (const auto& [k, v] : r.best_trial().params) out += k + " = " + fmt(v) + "\n";
  return out;
}

std::string trials_csv(const StudyResult& r) {
  std::string out = "trial,status,score,pruned_at,steps_used,checkpoints,params\n";
  for (const Trial& t : r.trials) {
    std::string cps, params;
    for (double v : t.checkpoints) cps += (cps.empty() ? "" : ";") + fmt(v);
    for (const auto& [k, v] : t.params) params += (params.empty() ? "" : ";") + k + "=" + fmt(v);
    out += std::to_string(t.id) + "," + to_string(t.status) + "," +
           (t.status == TrialStatus::complete ? fmt(t.score) : "") + "," +
           std::to_string(t.pruned_at) + "," + std::to_string(t.steps_used) + "," + cps + "," +
           params + "\n";
  }
  return out;
}

}  // namespace climrl::tune
