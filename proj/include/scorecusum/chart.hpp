#pragma once

#include "scorecusum/estimation.hpp"
#include "scorecusum/types.hpp"

#include <span>
#include <vector>

namespace scusum {

double vector_norm(const Vec& v, Norm norm);

/// Running prefix sums S_1, S_2, ... of score vectors for a CUSUM over
/// candidate changepoints. Entries may be single observations or whole
/// batches; candidates are exactly the appended boundaries.
class ScorePrefix {
 public:
  ScorePrefix() = default;
  explicit ScorePrefix(long start_index) : start_index_(start_index) {}

  void append(const Vec& s);

  long start_index() const { return start_index_; }
  std::size_t count() const { return sums_.size(); }
  bool empty() const { return sums_.empty(); }
  const std::vector<Vec>& prefix_sums() const { return sums_; }
  const Vec& last() const { return sums_.back(); }

  /// max over t' of || S_current - S_{t'-1} || with S_{start-1} = 0.
  /// Throws if nothing has been appended.
  double cusum_stat(Norm norm = Norm::L1) const;

 private:
  long start_index_ = 1;
  std::vector<Vec> sums_;
};

ScorePrefix append_score(ScorePrefix prefix, const Vec& s);
double cusum_stat(const ScorePrefix& prefix, Norm norm = Norm::L1);

/// Delta-score at the estimate fitted strictly before `obs.t`.
/// Throws Error if the estimate has seen data at or after `obs.t`.
Vec plugin_score(const Observation& obs, const MleState& mle_prev, ShiftKind kind,
                 std::span<const Index> delta_index = {});

/// Delta-score at a known pre-change parameter.
Vec known_score(const Observation& obs, const Vec& theta0, ShiftKind kind,
                std::span<const Index> delta_index = {});

}  // namespace scusum
