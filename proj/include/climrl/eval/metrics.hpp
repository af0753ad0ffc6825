#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "climrl/record.hpp"
#include "climrl/rl/config.hpp"

namespace climrl::eval {

enum class EnvKind { biascorr_v0, biascorr_v1, biascorr_v2, rce_v0 };

std::string env_display_name(EnvKind k);  // e.g. "SimpleClimateBiasCorrection-v0"

struct ThresholdSpec {
  EnvKind env = EnvKind::biascorr_v0;
  double threshold = 0.0;       // episodic return
  double per_step_error = 0.0;  // tabulated error per episodic step
  double core_offset = 0.0;     // subtracted from |threshold| before conversion
  int episode_steps = 0;
};

ThresholdSpec threshold_for(EnvKind k);
const std::vector<ThresholdSpec>& threshold_table();

// sqrt((|threshold| - offset) / steps)
double implied_per_step_error(const ThresholdSpec& s);
// True when the implied and tabulated per-step errors agree within `tol`
// (relative).
bool threshold_consistency(const ThresholdSpec& s, double tol = 0.02);

// Global step of the first episode whose return reaches the threshold.
std::optional<long> n_to_threshold(const RunRecord& rec, double threshold);
// Population variance of every return from the first crossing onwards.
std::optional<double> variance_after_threshold(const RunRecord& rec, double threshold);
// Final return minus threshold. Throws on an empty record.
double delta_from_final(const RunRecord& rec, double threshold);

struct MetricTriple {
  std::optional<long> n_to_threshold;
  std::optional<double> var_after_threshold;
  double delta_from_final = 0.0;
};

MetricTriple compute_metrics(const RunRecord& rec, double threshold);

// Cross-seed summary: median steps (never reached counts as +inf), mean
// variance over seeds that reached the threshold (+inf when none did), mean
// delta.
struct AggregateScore {
  rl::Algorithm algorithm = rl::Algorithm::reinforce;
  double median_n = std::numeric_limits<double>::infinity();
  double mean_variance = std::numeric_limits<double>::infinity();
  double mean_delta = 0.0;
  int seeds = 0;
  int seeds_reached = 0;
};

AggregateScore aggregate(rl::Algorithm a, const std::vector<MetricTriple>& per_seed);

// Lexicographic: fewer steps, then lower variance, then larger delta, then
// canonical algorithm order.
bool ranks_before(const AggregateScore& x, const AggregateScore& y);

struct ExperimentRanking {
  std::string experiment_id;
  std::vector<AggregateScore> ordered;
  std::vector<rl::Algorithm> top(std::size_t k) const;
};

// Ranks every algorithm with records for one experiment. Throws Error when
// `records` is empty or mixes experiments.
ExperimentRanking rank_experiment(const std::vector<RunRecord>& records, double threshold);

// Groups by experiment id (sorted) and ranks each group.
std::vector<ExperimentRanking> rank_algorithms(const std::vector<RunRecord>& records,
                                               const std::map<std::string, double>& thresholds);

struct FrequencyRow {
  int rank = 0;  // competition ranking: 1, 2, 2, 4
  rl::Algorithm algorithm = rl::Algorithm::reinforce;
  int count = 0;
};

// Counts how often each algorithm appears in the first k entries of each
// list. Ties keep canonical algorithm order; algorithms never listed are
// omitted.
std::vector<FrequencyRow> frequency_table(const std::vector<std::vector<rl::Algorithm>>& lists,
                                          std::size_t k);

// Externally supplied ranking lists, CSV rows "experiment_id,first,second,...".
// An optional header row starting with experiment_id and '#' comments are
// skipped.
struct TopList {
  std::string experiment_id;
  std::vector<rl::Algorithm> algorithms;
};
std::vector<TopList> parse_top_lists(const std::string& text, const std::string& origin = "<memory>");
std::vector<TopList> read_top_lists(const std::string& path);

std::string format_frequency_table(const std::vector<FrequencyRow>& rows, const std::string& title);
std::string frequency_table_csv(const std::vector<FrequencyRow>& rows);
std::string format_rankings(const std::vector<ExperimentRanking>& rankings, std::size_t k);
std::string rankings_csv(const std::vector<ExperimentRanking>& rankings, std::size_t k);

// Per-bucket mean return across seeds with a 95% band (1.96 sd / sqrt(n)).
struct CurvePoint {
  long step = 0;  // bucket end
  double mean = 0.0;
  double half_width = 0.0;
  int n = 0;
};

// Each seed contributes the mean of its episodes inside the bucket
// (step_begin, step_end]; buckets where no seed finished an episode are
// skipped.
std::vector<CurvePoint> learning_curve(const std::vector<RunRecord>& seeds, long bucket);
std::string curves_csv(const std::map<std::string, std::vector<CurvePoint>>& curves);

}  // namespace climrl::eval
