#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "climrl/env/rce.hpp"
#include "climrl/error.hpp"
#include "climrl/eval/analysis.hpp"
#include "climrl/eval/experiments.hpp"
#include "climrl/eval/metrics.hpp"
#include "climrl/eval/records.hpp"
#include "climrl/eval/suite.hpp"
#include "climrl/nn/checkpoint.hpp"
#include "climrl/rl/agent.hpp"
#include "climrl/tune/tuner.hpp"

namespace fs = std::filesystem;
using namespace climrl;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("invalid seed '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("invalid seed '" + s + "'");
    return static_cast<std::uint64_t>(v);
  };
  if (auto pos = text.find(".."); pos != std::string::npos) {
    const std::uint64_t lo = number(text.substr(0, pos));
    const std::uint64_t hi = number(text.substr(pos + 2));
    if (hi < lo) throw ConfigError("empty seed range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(number(part));
  if (out.empty()) throw ConfigError("no seeds given");
  return out;
}

std::vector<rl::Algorithm> parse_algorithms(const std::string& text) {
  if (text == "all") return rl::all_algorithms();
  std::vector<rl::Algorithm> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(rl::algorithm_from_string(part));
  if (out.empty()) throw ConfigError("no algorithm given");
  return out;
}

eval::RunConfig load_config(const std::string& path) {
  return path.empty() ? eval::RunConfig{} : eval::load_run_config(path);
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  eval::write_text_atomic(p, text);
}

std::string policy_file_name(const std::string& algorithm, std::uint64_t seed) {
  return algorithm + "-seed" + std::to_string(seed) + ".policy";
}

bool is_rce_experiment(const std::string& id) { return id.rfind("rce-", 0) == 0; }

struct TrainArgs {
  std::string experiment, algo, seeds = "1", config, out = "runs";
  long steps = 0;
  int workers = 1;
};

int cmd_train(const TrainArgs& a) {
  const eval::ExperimentSpec spec = eval::parse_experiment(a.experiment);
  const eval::RunConfig cfg = load_config(a.config);
  const auto algos = parse_algorithms(a.algo);
  const auto seeds = parse_seeds(a.seeds);
  const fs::path dir = fs::path(a.out) / spec.id;
  fs::create_directories(dir);

  std::mutex mu;
  eval::SuiteOptions opt;
  opt.workers = a.workers;
  opt.steps = a.steps;
  opt.on_result = [&](const eval::SuiteResult& r) {
    const std::string name = rl::to_string(r.task.algorithm);
    if (r.ok()) {
      eval::write_record(dir / eval::record_file_name(name, r.task.seed), r.record);
      nn::save_checkpoint((dir / policy_file_name(name, r.task.seed)).string(), r.policy);
    }
    std::lock_guard lock(mu);
    if (r.ok()) {
      const double last = r.record.points.empty() ? 0.0 : r.record.points.back().episodic_return;
      std::printf("%s seed %llu: %zu episodes, final return %.6g, %s\n", name.c_str(),
                  static_cast<unsigned long long>(r.task.seed), r.record.points.size(), last,
                  r.record.status.c_str());
    } else {
      std::printf("%s seed %llu: failed: %s\n", name.c_str(),
                  static_cast<unsigned long long>(r.task.seed), r.error.c_str());
    }
    std::fflush(stdout);
  };
  const auto results = eval::run_experiment_suite(spec, cfg, algos, seeds, opt);
  int failures = 0;
  for (const auto& r : results) {
    if (!r.ok() || r.record.status.rfind("nonfinite", 0) == 0) ++failures;
  }
  if (failures > 0) {
    std::fprintf(stderr, "%d of %zu runs failed\n", failures, results.size());
    return 2;
  }
  return 0;
}

struct TuneArgs {
  std::string experiment, algo, config, out = "tuning";
  long steps = 0;
  int workers = 1, trials = 32;
};

int cmd_tune(const TuneArgs& a) {
  const eval::ExperimentSpec spec = eval::parse_experiment(a.experiment);
  const eval::RunConfig cfg = load_config(a.config);
  std::string fragments;
  for (rl::Algorithm algo : parse_algorithms(a.algo)) {
    tune::StudyOptions opt;
    opt.n_trials = a.trials;
    opt.workers = a.workers;
    tune::RlStudySettings settings;
    settings.steps = a.steps;
    const tune::StudyResult r = tune::run_rl_study(algo, spec, cfg, opt, settings);
    const std::string name = rl::to_string(algo);
    const std::string fragment = tune::study_fragment(algo, spec.env_tag, r);
    fs::create_directories(a.out);
    eval::write_text_atomic(fs::path(a.out) / (spec.env_tag + "-" + name + ".ini"), fragment);
    eval::write_text_atomic(fs::path(a.out) / (spec.env_tag + "-" + name + "-trials.csv"),
                            tune::trials_csv(r));
    int pruned = 0;
    for (const auto& t : r.trials) pruned += t.status == tune::TrialStatus::pruned;
    std::printf("%s: best trial %d score %.6g (%d of %zu pruned)\n", name.c_str(),
                r.best_trial().id, r.best_trial().score, pruned, r.trials.size());
    fragments += fragment + "\n";
  }
  std::printf("\n%s", fragments.c_str());
  return 0;
}

std::string opt_num(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

int cmd_evaluate(const std::string& records_dir, const std::string& out) {
  const auto records = eval::load_records(records_dir);
  const auto thresholds = eval::experiment_thresholds();
  std::string csv = "experiment_id,algorithm,seed,status,episodes,n_to_threshold,var_after_threshold,delta_from_final\n";
  std::printf("%-22s %-10s %5s %10s %14s %14s\n", "experiment", "algorithm", "seed", "n_to_thr",
              "var_after", "delta_final");
  for (const RunRecord& rec : records) {
    auto it = thresholds.find(rec.experiment_id);
    if (it == thresholds.end()) throw ConfigError("no threshold for experiment " + rec.experiment_id);
    const eval::MetricTriple m = eval::compute_metrics(rec, it->second);
    const std::string n = m.n_to_threshold ? std::to_string(*m.n_to_threshold) : "";
    csv += rec.experiment_id + "," + rec.algorithm + "," + std::to_string(rec.seed) + "," +
           rec.status + "," + std::to_string(rec.points.size()) + "," + n + "," +
           opt_num(m.var_after_threshold) + "," + opt_num(m.delta_from_final) + "\n";
    std::printf("%-22s %-10s %5llu %10s %14s %14.6g\n", rec.experiment_id.c_str(),
                rec.algorithm.c_str(), static_cast<unsigned long long>(rec.seed),
                n.empty() ? "-" : n.c_str(),
                m.var_after_threshold ? opt_num(m.var_after_threshold).c_str() : "-",
                m.delta_from_final);
  }
  const auto rankings = eval::rank_algorithms(records, thresholds);
  std::printf("\n%s", eval::format_rankings(rankings, 8).c_str());
  if (!out.empty()) {
    fs::create_directories(out);
    eval::write_text_atomic(fs::path(out) / "metrics.csv", csv);
    eval::write_text_atomic(fs::path(out) / "aggregate.csv", eval::rankings_csv(rankings, 8));
  }
  return 0;
}

int cmd_rank(const std::string& records_dir, const std::string& lists_path, int top,
             const std::string& out) {
  std::vector<eval::TopList> lists;
  if (!lists_path.empty()) {
    lists = eval::read_top_lists(lists_path);
  } else {
    const auto rankings = eval::rank_algorithms(eval::load_records(records_dir), eval::experiment_thresholds());
    for (const auto& r : rankings) lists.push_back({r.experiment_id, r.top(static_cast<std::size_t>(top))});
  }
  std::string text, csv = "family,k,rank,algorithm,frequency\n", lists_csv = "experiment_id";
  for (int i = 1; i <= top; ++i) lists_csv += ",top" + std::to_string(i);
  lists_csv += "\n";
  text += "Top-" + std::to_string(top) + " per experiment\n";
  for (const auto& [id, list] : lists) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-22s", id.c_str());
    text += buf;
    lists_csv += id;
    for (rl::Algorithm a : list) {
      text += " " + rl::display_name(a);
      lists_csv += "," + rl::display_name(a);
    }
    text += "\n";
    lists_csv += "\n";
  }
  for (const bool rce : {false, true}) {
    std::vector<std::vector<rl::Algorithm>> family;
    for (const auto& [id, list] : lists) {
      if (is_rce_experiment(id) == rce) family.push_back(list);
    }
    if (family.empty()) continue;
    const std::string name = rce ? "RadiativeConvectiveModelEnv" : "SimpleClimateBiasCorrectionEnv";
    for (const int k : {top, 1}) {
      const auto rows = eval::frequency_table(family, static_cast<std::size_t>(k));
      text += "\n" + eval::format_frequency_table(rows, name + " top-" + std::to_string(k) + " frequency");
      for (const auto& r : rows) {
        csv += name + "," + std::to_string(k) + "," + std::to_string(r.rank) + "," +
               rl::display_name(r.algorithm) + "," + std::to_string(r.count) + "\n";
      }
      if (k == 1 && top == 1) break;
    }
  }
  std::printf("%s", text.c_str());
  if (!out.empty()) {
    fs::create_directories(out);
    eval::write_text_atomic(fs::path(out) / "rankings.txt", text);
    eval::write_text_atomic(fs::path(out) / "frequencies.csv", csv);
    eval::write_text_atomic(fs::path(out) / "top_lists.csv", lists_csv);
  }
  return 0;
}

struct ProfileArgs {
  std::string policy, algo, config, out;
  std::uint64_t seed = 1;
};

int cmd_export_profile(const ProfileArgs& a) {
  const eval::RunConfig cfg = load_config(a.config);
  auto env = eval::make_env(eval::EnvKind::rce_v0, cfg.env_overrides);
  const nn::Mlp policy = nn::load_checkpoint(a.policy);
  rl::SpaceScaler scaler(env->observation_space(), env->action_space());
  rl::run_policy_episode(*env, rl::algorithm_from_string(a.algo), policy, scaler, a.seed);
  auto& rce = dynamic_cast<env::RceEnv&>(*env);
  const fs::path p(a.out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  env::write_profile_export(a.out, rce.observed(), rce.column().temperature);
  std::printf("wrote %zu levels to %s\n", rce.column().levels(), a.out.c_str());
  return 0;
}

int cmd_export_curves(const std::string& records_dir, long bucket, const std::string& out) {
  std::map<std::string, std::vector<RunRecord>> series;
  for (const RunRecord& r : eval::load_records(records_dir)) {
    series[r.experiment_id + "/" + r.algorithm].push_back(r);
  }
  std::map<std::string, std::vector<eval::CurvePoint>> curves;
  for (const auto& [name, recs] : series) curves[name] = eval::learning_curve(recs, bucket);
  const std::string csv = eval::curves_csv(curves);
  if (out.empty()) {
    std::printf("%s", csv.c_str());
  } else {
    write_output(out, csv);
    std::printf("wrote %zu series to %s\n", curves.size(), out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforcement-learning benchmarks for climate model calibration"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train algorithms on one experiment and write run records");
  train_cmd->add_option("--experiment", train.experiment, "Experiment id, e.g. v0-homo-64L-60k")->required();
  train_cmd->add_option("--algo", train.algo, "Algorithm tag, comma list or 'all'")->required();
  train_cmd->add_option("--seeds", train.seeds, "Seeds: 3, 1,2,5 or 1..10");
  train_cmd->add_option("--steps", train.steps, "Step budget (default: experiment budget)");
  train_cmd->add_option("--workers", train.workers, "Parallel (algorithm, seed) tasks");
  train_cmd->add_option("--config", train.config, "INI config file");
  train_cmd->add_option("--out", train.out, "Output directory");

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "Random search with median pruning");
  tune_cmd->add_option("--experiment", tune_args.experiment, "Experiment id")->required();
  tune_cmd->add_option("--algo", tune_args.algo, "Algorithm tag, comma list or 'all'")->required();
  tune_cmd->add_option("--trials", tune_args.trials, "Trials per algorithm");
  tune_cmd->add_option("--steps", tune_args.steps, "Steps per trial (default: experiment budget)");
  tune_cmd->add_option("--workers", tune_args.workers, "Concurrent trials");
  tune_cmd->add_option("--config", tune_args.config, "INI config file");
  tune_cmd->add_option("--out", tune_args.out, "Output directory");

  std::string eval_records, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Per-run metrics and per-experiment aggregates");
  eval_cmd->add_option("--records", eval_records, "Directory of run records")->required();
  eval_cmd->add_option("--out", eval_out, "Directory for metrics.csv and aggregate.csv");

  std::string rank_records, rank_lists, rank_out;
  int rank_top = 3;
  auto* rank_cmd = app.add_subcommand("rank", "Top-k lists and frequency tables");
  auto* rank_src = rank_cmd->add_option("--records", rank_records, "Directory of run records");
  rank_cmd->add_option("--lists", rank_lists, "CSV of experiment_id,first,second,... lists")
      ->excludes(rank_src);
  rank_cmd->add_option("--top", rank_top, "k for the top-k table")->check(CLI::PositiveNumber);
  rank_cmd->add_option("--out", rank_out, "Output directory");

  auto* export_cmd = app.add_subcommand("export", "Export plot data");
  export_cmd->require_subcommand(1);
  ProfileArgs profile;
  auto* profile_cmd = export_cmd->add_subcommand("profile", "Final temperature profile of an RCE policy");
  profile_cmd->add_option("--policy", profile.policy, "Policy checkpoint written by train")->required();
  profile_cmd->add_option("--algo", profile.algo, "Algorithm that trained the policy")->required();
  profile_cmd->add_option("--seeds", profile.seed, "Episode seed");
  profile_cmd->add_option("--config", profile.config, "INI config file");
  profile_cmd->add_option("--out", profile.out, "Output CSV")->required();
  std::string curve_records, curve_out;
  long bucket = 1000;
  auto* curves_cmd = export_cmd->add_subcommand("curves", "Mean return with 95% bands per step bucket");
  curves_cmd->add_option("--records", curve_records, "Directory of run records")->required();
  curves_cmd->add_option("--bucket", bucket, "Bucket width in steps")->check(CLI::PositiveNumber);
  curves_cmd->add_option("--out", curve_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*tune_cmd) return cmd_tune(tune_args);
    if (*eval_cmd) return cmd_evaluate(eval_records, eval_out);
    if (*rank_cmd) {
      if (rank_records.empty() && rank_lists.empty()) throw ConfigError("rank needs --records or --lists");
      return cmd_rank(rank_records, rank_lists, rank_top, rank_out);
    }
    if (*profile_cmd) return cmd_export_profile(profile);
    if (*curves_cmd) return cmd_export_curves(curve_records, bucket, curve_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
