#include "climrl/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "climrl/error.hpp"

namespace climrl::eval {

std::string env_display_name(EnvKind k) {
  switch (k) {
    case EnvKind::biascorr_v0:
      return "SimpleClimateBiasCorrection-v0";
    case EnvKind::biascorr_v1:
      return "SimpleClimateBiasCorrection-v1";
    case EnvKind::biascorr_v2:
      return "SimpleClimateBiasCorrection-v2";
    case EnvKind::rce_v0:
      return "RadiativeConvectiveModel-v0";
  }
  return "?";
}

const std::vector<ThresholdSpec>& threshold_table() {
  static const std::vector<ThresholdSpec> table = {
      {EnvKind::biascorr_v0, -0.25, 0.035, 0.0, 200},
      {EnvKind::biascorr_v1, -2.718, 0.116, 0.0, 200},
      {EnvKind::biascorr_v2, -(160.0 + 2.718), 0.116, 160.0, 200},
      {EnvKind::rce_v0, -43900.0, 9.37, 0.0, 500},
  };
  return table;
}

ThresholdSpec threshold_for(EnvKind k) {
  for (const auto& s : threshold_table()) {
    if (s.env == k) return s;
  }
  throw ConfigError("no threshold for environment");
}

double implied_per_step_error(const ThresholdSpec& s) {
  return std::sqrt((std::abs(s.threshold) - s.core_offset) / s.episode_steps);
}

bool threshold_consistency(const ThresholdSpec& s, double tol) {
  if (s.episode_steps <= 0 || s.per_step_error <= 0.0) return false;
  const double core = std::abs(s.threshold) - s.core_offset;
  if (!(core > 0.0)) return false;
  return std::abs(implied_per_step_error(s) - s.per_step_error) <= tol * s.per_step_error;
}

std::optional<long> n_to_threshold(const RunRecord& rec, double threshold) {
  for (const EpisodePoint& p : rec.points) {
    if (p.episodic_return >= threshold) return p.global_step;
  }
  return std::nullopt;
}

std::optional<double> variance_after_threshold(const RunRecord& rec, double threshold) {
  auto it = std::find_if(rec.points.begin(), rec.points.end(),
                         [&](const EpisodePoint& p) { return p.episodic_return >= threshold; });
  if (it == rec.points.end()) return std::nullopt;
  // Shifted by the first value so constant tails give exactly zero.
  const double shift = it->episodic_return;
  const auto n = static_cast<double>(rec.points.end() - it);
  double mean = 0.0;
  for (auto j = it; j != rec.points.end(); ++j) mean += j->episodic_return - shift;
  mean /= n;
  double var = 0.0;
  for (auto j = it; j != rec.points.end(); ++j) {
    const double d = j->episodic_return - shift - mean;
    var += d * d;
  }
  return var / n;
}

double delta_from_final(const RunRecord& rec, double threshold) {
  if (rec.points.empty()) throw Error("delta_from_final: record has no episodes");
  return rec.points.back().episodic_return - threshold;
}

MetricTriple compute_metrics(const RunRecord& rec, double threshold) {
  if (rec.points.empty()) throw Error("record " + rec.algorithm + " seed " +
                                      std::to_string(rec.seed) + " has no episodes");
  return {n_to_threshold(rec, threshold), variance_after_threshold(rec, threshold),
          delta_from_final(rec, threshold)};
}

AggregateScore aggregate(rl::Algorithm a, const std::vector<MetricTriple>& per_seed) {
  if (per_seed.empty()) throw Error("aggregate: no seeds for " + rl::to_string(a));
  AggregateScore s;
  s.algorithm = a;
  s.seeds = static_cast<int>(per_seed.size());
  std::vector<double> n;
  double var_sum = 0.0, delta_sum = 0.0;
  for (const MetricTriple& m : per_seed) {
    n.push_back(m.n_to_threshold ? static_cast<double>(*m.n_to_threshold)
                                 : std::numeric_limits<double>::infinity());
    if (m.var_after_threshold) {
      var_sum += *m.var_after_threshold;
      ++s.seeds_reached;
    }
    delta_sum += m.delta_from_final;
  }
  std::sort(n.begin(), n.end());
  const std::size_t k = n.size();
  s.median_n = k % 2 ? n[k / 2] : 0.5 * (n[k / 2 - 1] + n[k / 2]);
  if (s.seeds_reached > 0) s.mean_variance = var_sum / s.seeds_reached;
  s.mean_delta = delta_sum / static_cast<double>(k);
  return s;
}

bool ranks_before(const AggregateScore& x, const AggregateScore& y) {
  if (x.median_n != y.median_n) return x.median_n < y.median_n;
  if (x.mean_variance != y.mean_variance) return x.mean_variance < y.mean_variance;
  if (x.mean_delta != y.mean_delta) return x.mean_delta > y.mean_delta;
  return x.algorithm < y.algorithm;
}

std::vector<rl::Algorithm> ExperimentRanking::top(std::size_t k) const {
  std::vector<rl::Algorithm> out;
  for (std::size_t i = 0; i < std::min(k, ordered.size()); ++i) out.push_back(ordered[i].algorithm);
  return out;
}

ExperimentRanking rank_experiment(const std::vector<RunRecord>& records, double threshold) {
  if (records.empty()) throw Error("rank_experiment: empty group");
  ExperimentRanking r;
  r.experiment_id = records.front().experiment_id;
  std::map<rl::Algorithm, std::vector<MetricTriple>> by_algo;
  for (const RunRecord& rec : records) {
    if (rec.experiment_id != r.experiment_id) throw Error("rank_experiment: mixed experiments");
    by_algo[rl::algorithm_from_string(rec.algorithm)].push_back(compute_metrics(rec, threshold));
  }
  for (const auto& [a, triples] : by_algo) r.ordered.push_back(aggregate(a, triples));
  std::sort(r.ordered.begin(), r.ordered.end(), ranks_before);
  return r;
}

std::vector<ExperimentRanking> rank_algorithms(const std::vector<RunRecord>& records,
                                               const std::map<std::string, double>& thresholds) {
  std::map<std::string, std::vector<RunRecord>> groups;
  for (const RunRecord& rec : records) groups[rec.experiment_id].push_back(rec);
  std::vector<ExperimentRanking> out;
  for (const auto& [id, group] : groups) {
    auto it = thresholds.find(id);
    if (it == thresholds.end()) throw ConfigError("no threshold for experiment " + id);
    out.push_back(rank_experiment(group, it->second));
  }
  return out;
}

std::vector<FrequencyRow> frequency_table(const std::vector<std::vector<rl::Algorithm>>& lists,
                                          std::size_t k) {
  std::map<rl::Algorithm, int> counts;
  for (const auto& list : lists) {
    for (std::size_t i = 0; i < std::min(k, list.size()); ++i) ++counts[list[i]];
  }
  std::vector<FrequencyRow> rows;
  for (rl::Algorithm a : rl::all_algorithms()) {
    if (counts[a] > 0) rows.push_back({0, a, counts[a]});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FrequencyRow& x, const FrequencyRow& y) { return x.count > y.count; });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rank = (i > 0 && rows[i].count == rows[i - 1].count) ? rows[i - 1].rank
                                                                  : static_cast<int>(i) + 1;
  }
  return rows;
}

std::vector<TopList> parse_top_lists(const std::string& text, const std::string& origin) {
  std::vector<TopList> out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    TopList list;
    std::getline(ss, list.experiment_id, ',');
    const bool header = first && list.experiment_id == "experiment_id";
    first = false;
    if (header) continue;
    std::string cell;
    while (std::getline(ss, cell, ',')) list.algorithms.push_back(rl::algorithm_from_string(cell));
    if (list.algorithms.empty()) {
      throw ConfigError(origin + ": experiment " + list.experiment_id + " lists no algorithms");
    }
    out.push_back(std::move(list));
  }
  if (out.empty()) throw IoError(origin + ": no ranking lists");
  return out;
}

std::vector<TopList> read_top_lists(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lists file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_top_lists(ss.str(), path);
}

std::string format_frequency_table(const std::vector<FrequencyRow>& rows,
                                   const std::string& title) {
  std::string out = title + "\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-5s %-10s %s\n", "Rank", "Algorithm", "Frequency");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-5d %-10s %d\n", r.rank, rl::display_name(r.algorithm).c_str(),
                  r.count);
    out += buf;
  }
  return out;
}

std::string frequency_table_csv(const std::vector<FrequencyRow>& rows) {
  std::string out = "rank,algorithm,frequency\n";
  for (const auto& r : rows) {
    out += std::to_string(r.rank) + "," + rl::display_name(r.algorithm) + "," +
           std::to_string(r.count) + "\n";
  }
  return out;
}

std::string format_rankings(const std::vector<ExperimentRanking>& rankings, std::size_t k) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-22s", "Experiment");
  out += buf;
  for (std::size_t i = 0; i < k; ++i) {
    std::snprintf(buf, sizeof buf, " #%-9zu", i + 1);
    out += buf;
  }
  out += "\n";
  for (const auto& r : rankings) {
    std::snprintf(buf, sizeof buf, "%-22s", r.experiment_id.c_str());
    out += buf;
    for (rl::Algorithm a : r.top(k)) {
      std::snprintf(buf, sizeof buf, " %-10s", rl::display_name(a).c_str());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string rankings_csv(const std::vector<ExperimentRanking>& rankings, std::size_t k) {
  std::string out = "experiment_id,position,algorithm,median_n_to_threshold,mean_variance,"
                    "mean_delta,seeds,seeds_reached\n";
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < std::min(k, r.ordered.size()); ++i) {
      const AggregateScore& s = r.ordered[i];
      out += r.experiment_id + "," + std::to_string(i + 1) + "," + rl::display_name(s.algorithm) +
             "," + num(s.median_n) + "," + num(s.mean_variance) + "," + num(s.mean_delta) + "," +
             std::to_string(s.seeds) + "," + std::to_string(s.seeds_reached) + "\n";
    }
  }
  return out;
}

std::vector<CurvePoint> learning_curve(const std::vector<RunRecord>& seeds, long bucket) {
  if (bucket <= 0) throw ConfigError("curve bucket must be positive");
  long last = 0;
  for (const auto& r : seeds) {
    if (!r.points.empty()) last = std::max(last, r.points.back().global_step);
  }
  std::vector<CurvePoint> out;
  for (long end = bucket; end - bucket < last; end += bucket) {
    std::vector<double> means;
    for (const auto& r : seeds) {
      double s = 0.0;
      int n = 0;
      for (const auto& p : r.points) {
        if (p.global_step > end - bucket && p.global_step <= end) {
          s += p.episodic_return;
          ++n;
        }
      }
      if (n > 0) means.push_back(s / n);
    }
    if (means.empty()) continue;
    CurvePoint c;
    c.step = end;
    c.n = static_cast<int>(means.size());
    for (double m : means) c.mean += m;
    c.mean /= c.n;
    if (c.n > 1) {
      double ss = 0.0;
      for (double m : means) ss += (m - c.mean) * (m - c.mean);
      c.half_width = 1.96 * std::sqrt(ss / (c.n - 1)) / std::sqrt(static_cast<double>(c.n));
    }
    out.push_back(c);
  }
  return out;
}

std::string curves_csv(const std::map<std::string, std::vector<CurvePoint>>& curves) {
  std::string out = "series,step,mean,lower,upper,n\n";
  char buf[160];
  for (const auto& [name, pts] : curves) {
    for (const auto& c : pts) {
      std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%d\n", c.step, c.mean,
                    c.mean - c.half_width, c.mean + c.half_width, c.n);
      out += name + "," + buf;
    }
  }
  return out;
}

}  // namespace climrl::eval
