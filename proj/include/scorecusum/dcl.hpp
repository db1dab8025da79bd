#pragma once

#include "scorecusum/rng.hpp"
#include "scorecusum/types.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace scusum {

/// Linear alpha-spending: alpha_total * (v - 1) / (K - 1) on [1, K].
struct SpendingFunction {
  double alpha_total = 0.1;
  double K = 4.0;
};

double alpha_spend(const SpendingFunction& sf, double v);

/// Parametric-bootstrap outcome draw at the null (delta = 0). The success
/// probability is clamped to [1e-12, 1 - 1e-12].
int resample_outcome(const Vec& z, const Vec& theta_hat_prev, Engine& rng);

/// Inverse of a cumulative information matrix. Adds a 1e-6 ridge when the
/// matrix is singular or its condition number exceeds 1e10, and reports it.
Mat inverse_information(const Mat& lambda, bool* jittered = nullptr);

/// Observed-information estimates indexed by SOC position (1-based).
/// lambda_cum[i-1] = sum_{j <= i} info_theta(., z_j); v_per_obs[i-1] = cross_info at i.
struct InformationEstimates {
  std::vector<Mat> lambda_cum;
  std::vector<Mat> v_per_obs;
};

/// Per-observation bootstrap scores of one sequence, 1-based by SOC position.
struct BootstrapTrace {
  std::vector<Vec> delta_scores;
  std::vector<Vec> theta_scores;
};

/// L1 norm of the approximating process over [t_first, t_last]:
///   sum_i delta_score(i) + sum_i V(i) Lambda(i-1)^{-1} sum_{j<i} theta_score(j).
/// Requires 2 <= t_first <= t_last within the trace and information.
double phi_stat(const BootstrapTrace& seq, const InformationEstimates& info, long t_first, long t_last);

/// Outcome of one control-limit update.
struct ControlLimit {
  double h = std::numeric_limits<double>::infinity();  // alarm threshold (strict exceedance)
  double h_report = 0.0;  // finite value for traces; max survivor statistic when nothing is spent
  int target = 0;         // eliminations scheduled at this step
  std::vector<int> eliminated;
  bool adequacy_warning = false;  // fewer than five exceedances at this step
};

/// Picks the alarm threshold so exactly `target` of `survivors` have a
/// statistic strictly above it, breaking ties by lower id. `stats` is indexed
/// by sequence id. target = 0 yields h = +infinity.
ControlLimit threshold_for_target(std::span<const int> survivors, std::span<const double> stats, int target);

/// Bootstrap ensemble behind the dynamic control limits.
///
/// Sequences are identified by 0..B-1; each has its own RNG stream keyed by
/// (master_seed, id) so results do not depend on evaluation order. Per
/// sequence the ensemble keeps the running theta-score sum, the running sum
/// of corrected delta-scores, and snapshots of the latter at batch boundaries.
class BootstrapEnsemble {
 public:
  BootstrapEnsemble(int B, std::uint64_t master_seed, Index q, Index d, ShiftKind kind,
                    std::vector<Index> delta_index = {});

  /// Resamples the non-contamination window at `theta_hat` and seeds the
  /// theta-score sums. Leaves the corrected delta-score sums at zero.
  void initialize(std::span<const Vec> window, const Vec& theta_hat);

  /// Advances every survivor by one observation: draws Y* at `theta_prev` and
  /// adds delta_score + correction * theta_sum. The new theta score joins
  /// theta_sum at the next close_batch, matching a chart whose estimate is
  /// refit once per batch. `correction` is d x q; pass an empty matrix for
  /// the known-theta chart.
  void step(const Vec& z, const Vec& theta_prev, const Mat& correction);

  /// Folds the batch's theta scores into theta_sum, recomputes every
  /// survivor's chart statistic over the stored boundaries, then stores the
  /// current sums as a new boundary.
  void close_batch(Norm norm);

  /// Sets the control limit at SOC index t so the cumulative eliminated count
  /// tracks round(B * alpha_spend(t / m)), and removes the exceeders.
  ControlLimit update_control_limit(const SpendingFunction& sf, long t, long m);

  int size() const { return B_; }
  const std::vector<int>& survivors() const { return survivors_; }
  double stat(int id) const { return stats_[static_cast<std::size_t>(id)]; }
  double spent_alpha() const { return spent_alpha_; }
  long eliminated() const { return eliminated_; }
  std::size_t resample_count() const { return resamples_; }

  /// Records per-observation scores of every sequence (tests and audits).
  void enable_trace() { tracing_ = true; traces_.assign(static_cast<std::size_t>(B_), {}); }
  const BootstrapTrace& trace(int id) const { return traces_.at(static_cast<std::size_t>(id)); }

 private:
  int B_;
  Index q_;
  Index d_;
  ShiftKind kind_;
  std::vector<Index> delta_index_;
  std::vector<Engine> rngs_;
  Mat theta_sum_;  // q x B
  Mat pending_;    // theta scores of the open batch
  Mat corrected_;  // d x B
  std::vector<Mat> boundaries_;
  std::vector<double> stats_;
  std::vector<int> survivors_;
  double spent_alpha_ = 0.0;
  long eliminated_ = 0;
  std::size_t resamples_ = 0;
  bool tracing_ = false;
  std::vector<BootstrapTrace> traces_;
};

/// Value-style wrappers mirroring the member functions.
BootstrapEnsemble step_ensemble(BootstrapEnsemble ens, const Vec& z, const Vec& theta_prev, const Mat& correction);
std::pair<ControlLimit, BootstrapEnsemble> update_control_limit(BootstrapEnsemble ens, const SpendingFunction& sf,
                                                                long t, long m);

}  // namespace scusum
