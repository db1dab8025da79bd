#pragma once

#include "scorecusum/monitor.hpp"
#include "scorecusum/simgen.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scusum {

struct ReplicateOutcome {
  int replicate = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  std::string error;
  std::optional<long> alarm_soc;
  std::optional<long> alarm_abs;
  std::optional<long> kappa_soc;
  std::optional<long> kappa_abs;
  long n_monitored = 0;
  std::vector<TraceRow> trace;  // kept only when requested
};

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  long count = 0;
  double mean_predicted = 0.0;
  double mean_observed = 0.0;
};

struct ExperimentMetrics {
  int n_valid = 0;
  double false_alarm_rate = 0.0;
  double alarm_rate = 0.0;
  std::optional<double> power;  // only when the scenario has a changepoint
  std::optional<double> delay_q25;
  std::optional<double> delay_q50;
  std::optional<double> delay_q75;
  std::optional<double> median_alarm_time;  // no-alarm replicates count as +infinity
  double censored_mass = 0.0;
  std::vector<long> cdf_grid;
  std::vector<double> cdf;
};

struct ExperimentReport {
  std::string scenario;
  std::string label;  // distinguishes several monitors run on the same streams
  int n_replicates = 0;
  int invalid_count = 0;
  std::vector<ReplicateOutcome> replicates;
  ExperimentMetrics metrics;
  std::vector<double> auc_by_period;  // mean AUC of the monitored predictions per quarter of the horizon
  std::vector<CalibrationBin> calibration;
};

struct ExperimentSpec {
  ScenarioConfig scenario;
  MonitorConfig monitor;
  int n_replicates = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool keep_traces = false;
};

/// Seeds for replicate r: the stream and its bootstrap.
std::uint64_t replicate_seed(std::uint64_t master, int r);
std::uint64_t bootstrap_seed(std::uint64_t replicate_seed);

/// Runs `fn(r)` for r in [0, n) on `jobs` threads. Results land by index.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// Known theta_0 for a locked model: MLE of the monitoring model on `n` fresh
/// pre-change SOC observations under the first treatment phase.
Vec project_known_theta(const ScenarioConfig& scenario, Conditioning conditioning, long n = 100000);

/// Simulates each replicate once and runs every monitor in `monitors` on the
/// same stream. Returns one report per monitor, labelled by `labels`.
std::vector<ExperimentReport> run_paired(const ScenarioConfig& scenario, std::span<const MonitorConfig> monitors,
                                         std::span<const std::string> labels, int n_replicates, std::uint64_t seed,
                                         int jobs = 1, bool keep_traces = false);

ExperimentReport run_experiment(const ExperimentSpec& spec);

/// Recomputes the metrics of `report` from its replicate outcomes.
ExperimentMetrics summarize(const std::vector<ReplicateOutcome>& reps, long horizon);

std::vector<double> alarm_cdf(const ExperimentReport& report, std::span<const long> grid);
/// Mann-Whitney AUC with average ranks for ties. Throws for single-class data.
double auc(std::span<const double> predictions, std::span<const int> outcomes);
std::vector<CalibrationBin> calibration_bins(std::span<const double> predictions, std::span<const int> outcomes,
                                             int n_bins);

/// Bernoulli CUSUM on misclassification indicators: S_t = max(0, S_{t-1} + e_t - p0 - k).
std::vector<double> naive_cusum_path(std::span<const int> errors, double p0, double k);

/// Static limit: (1 - alpha) quantile of max_t S_t over B Bernoulli(p0) sequences of length `length`.
double naive_static_limit(double p0, double k, long length, double alpha, int B, std::uint64_t seed);

struct NaiveComparison {
  ExperimentReport naive;
  ExperimentReport score;
};

/// Naive misclassification CUSUM (classifier 1{f > 0.7}, allowance 0.05)
/// against the score-based monitor on identical streams.
NaiveComparison naive_cusum_baseline(const ScenarioConfig& scenario, const MonitorConfig& cfg, int n_replicates,
                                     std::uint64_t seed, int jobs = 1, double allowance = 0.05);

}  // namespace scusum
