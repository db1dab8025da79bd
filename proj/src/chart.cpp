#include "scorecusum/chart.hpp"

#include "scorecusum/errors.hpp"
#include "scorecusum/models.hpp"

#include <algorithm>
#include <string>

namespace scusum {

double vector_norm(const Vec& v, Norm norm) {
  return norm == Norm::L1 ? v.lpNorm<1>() : v.norm();
}

void ScorePrefix::append(const Vec& s) {
  check_finite(s, "score");
  if (sums_.empty()) {
    sums_.push_back(s);
    return;
  }
  if (s.size() != sums_.back().size()) throw DimensionError("score dimension changed mid-stream");
  sums_.push_back(sums_.back() + s);
}

double ScorePrefix::cusum_stat(Norm norm) const {
  if (sums_.empty()) throw Error("CUSUM of an empty prefix is undefined");
  const Vec& cur = sums_.back();
  double best = vector_norm(cur, norm);  // t' = start
  for (std::size_t k = 0; k + 1 < sums_.size(); ++k) {
    best = std::max(best, vector_norm(cur - sums_[k], norm));
  }
  return best;
}

ScorePrefix append_score(ScorePrefix prefix, const Vec& s) {
  prefix.append(s);
  return prefix;
}

double cusum_stat(const ScorePrefix& prefix, Norm norm) { return prefix.cusum_stat(norm); }

Vec plugin_score(const Observation& obs, const MleState& mle_prev, ShiftKind kind,
                 std::span<const Index> delta_index) {
  if (mle_prev.max_index >= obs.t) {
    throw Error("estimate fitted on index " + std::to_string(mle_prev.max_index) +
                " cannot score observation " + std::to_string(obs.t));
  }
  return score_delta(mle_prev.theta_hat, obs.z, obs.y, kind, delta_index);
}

Vec known_score(const Observation& obs, const Vec& theta0, ShiftKind kind,
                std::span<const Index> delta_index) {
  return score_delta(theta0, obs.z, obs.y, kind, delta_index);
}

}  // namespace scusum
