#pragma once

#include "scorecusum/dcl.hpp"
#include "scorecusum/simgen.hpp"
#include "scorecusum/stream.hpp"
#include "scorecusum/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace scusum {

enum class ThetaMode { Known, Plugin };

struct MonitorConfig {
  long m = 100;
  double K = 4.0;
  double alpha = 0.1;
  int B = 500;
  int batch_size = 10;
  ShiftKind kind = ShiftKind::RiskShift;
  Norm norm = Norm::L1;
  Conditioning conditioning = Conditioning::PredictionOnly;
  ThetaMode theta_mode = ThetaMode::Plugin;
  Vec known_theta;  // used when theta_mode == Known
  std::vector<Index> delta_index;  // empty: delta spans the whole predictor
  std::uint64_t seed = 0;
};

void validate(const MonitorConfig& cfg);

/// Monitoring horizon floor(m K) in SOC time.
long horizon(const MonitorConfig& cfg);

struct TraceRow {
  long t = 0;      // SOC index at the batch boundary
  long t_abs = 0;  // arrival time of that observation
  double chart = 0.0;
  double h = 0.0;  // reported control limit (finite)
  bool limit_active = false;  // false when nothing was spent and the alarm threshold is +infinity
  int survivors = 0;
  double theta_norm = 0.0;
};

struct ScoringAudit {
  long t = 0;             // scored observation
  long estimate_max = 0;  // largest index the estimate had seen
};

struct MonitorDiagnostics {
  int adequacy_warnings = 0;
  int ridge_fallbacks = 0;
  int information_jitters = 0;
  long eliminated = 0;
  std::size_t resamples = 0;
  int refits = 0;
  std::vector<ScoringAudit> audit;
  std::vector<long> consumed_abs;  // arrival times of every observation the monitor used
};

struct MonitorResult {
  std::optional<long> alarm_time;
  std::optional<long> alarm_time_abs;
  std::vector<TraceRow> trace;
  Vec final_theta_hat;
  MonitorDiagnostics diagnostics;
};

/// Score-based CUSUM with bootstrap dynamic control limits.
///
/// Fits the nuisance parameter on the first m observations (plugin mode),
/// then walks batches of `batch_size` over indices m+1..floor(mK): scores each
/// observation at the estimate from before its batch, advances the bootstrap
/// ensemble, sets the limit from the alpha-spending schedule, and stops at
/// the first batch whose chart strictly exceeds it. Throws
/// StreamExhaustedError for fewer than m observations and lets estimation
/// errors propagate.
MonitorResult run_monitor(const MonitorConfig& cfg, const SocStream& stream);

/// Routes each record to monitoring (first) or model updating (second) by a
/// Bernoulli(fraction) draw keyed on (seed, t). Matches the routing `simulate` uses.
std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> split_stream(
    const std::vector<PatientRecord>& records, double monitor_fraction, std::uint64_t seed);

}  // namespace scusum
