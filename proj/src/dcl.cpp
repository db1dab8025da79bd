#include "scorecusum/dcl.hpp"

#include "scorecusum/chart.hpp"
#include "scorecusum/errors.hpp"
#include "scorecusum/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace scusum {

double alpha_spend(const SpendingFunction& sf, double v) {
  if (!(sf.K > 1.0)) throw ConfigError("spending horizon K must exceed 1");
  if (!(sf.alpha_total > 0.0 && sf.alpha_total < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  // Tolerate rounding at the right end of the horizon.
  if (!(v >= 1.0 && v <= sf.K * (1.0 + 1e-12))) {
    throw Error("alpha spending argument " + std::to_string(v) + " outside [1, K]");
  }
  return sf.alpha_total * (std::min(v, sf.K) - 1.0) / (sf.K - 1.0);
}

int resample_outcome(const Vec& z, const Vec& theta_hat_prev, Engine& rng) {
  if (z.size() != theta_hat_prev.size()) throw DimensionError("resample: theta and z differ in length");
  const double p = std::clamp(sigmoid(theta_hat_prev.dot(z)), kProbClamp, 1.0 - kProbClamp);
  return bernoulli(rng, p);
}

Mat inverse_information(const Mat& lambda, bool* jittered) {
  const Index q = lambda.rows();
  Eigen::SelfAdjointEigenSolver<Mat> es(lambda, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  const bool bad = !(lo > 0.0) || hi / lo > 1e10;
  if (jittered) *jittered = bad;
  Mat reg = lambda;
  if (bad) reg += 1e-6 * Mat::Identity(q, q);
  return reg.ldlt().solve(Mat::Identity(q, q));
}

double phi_stat(const BootstrapTrace& seq, const InformationEstimates& info, long t_first, long t_last) {
  const long n = static_cast<long>(seq.delta_scores.size());
  if (t_first < 2 || t_last < t_first || t_last > n || static_cast<long>(seq.theta_scores.size()) < t_last ||
      static_cast<long>(info.lambda_cum.size()) < t_last - 1 || static_cast<long>(info.v_per_obs.size()) < t_last) {
    throw Error("phi_stat: candidate range outside the available trace");
  }
  const auto at = [](long i) { return static_cast<std::size_t>(i - 1); };
  Vec theta_sum = Vec::Zero(seq.theta_scores.front().size());
  for (long j = 1; j < t_first; ++j) theta_sum += seq.theta_scores[at(j)];
  Vec total = Vec::Zero(seq.delta_scores.front().size());
  for (long i = t_first; i <= t_last; ++i) {
    total += seq.delta_scores[at(i)];
    total += info.v_per_obs[at(i)] * inverse_information(info.lambda_cum[at(i - 1)]) * theta_sum;
    theta_sum += seq.theta_scores[at(i)];
  }
  return total.lpNorm<1>();
}

BootstrapEnsemble::BootstrapEnsemble(int B, std::uint64_t master_seed, Index q, Index d, ShiftKind kind,
                                     std::vector<Index> delta_index)
    : B_(B), q_(q), d_(d), kind_(kind), delta_index_(std::move(delta_index)) {
  if (B < 1) throw ConfigError("bootstrap size B must be positive");
  if (!delta_index_.empty() && static_cast<Index>(delta_index_.size()) != d) {
    throw DimensionError("delta index map length differs from d");
  }
  rngs_.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    rngs_.push_back(make_engine(master_seed, {stream::kBootstrap, static_cast<std::uint64_t>(b)}));
  }
  theta_sum_ = Mat::Zero(q, B);
  pending_ = Mat::Zero(q, B);
  corrected_ = Mat::Zero(d, B);
  boundaries_.push_back(Mat::Zero(d, B));
  stats_.assign(static_cast<std::size_t>(B), 0.0);
  survivors_.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) survivors_[static_cast<std::size_t>(b)] = b;
}

namespace {

Vec restrict_to(const Vec& full, const std::vector<Index>& idx) {
  if (idx.empty()) return full;
  Vec out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = full[idx[k]];
  return out;
}

}  // namespace

void BootstrapEnsemble::initialize(std::span<const Vec> window, const Vec& theta_hat) {
  for (const Vec& z : window) {
    if (z.size() != q_) throw DimensionError("window predictor has the wrong length");
    const double mu = sigmoid(theta_hat.dot(z));
    const double p = std::clamp(mu, kProbClamp, 1.0 - kProbClamp);
    for (int b : survivors_) {
      const int y = bernoulli(rngs_[static_cast<std::size_t>(b)], p);
      const Vec s = (static_cast<double>(y) - mu) * z;
      theta_sum_.col(b) += s;
      if (tracing_) {
        auto& tr = traces_[static_cast<std::size_t>(b)];
        tr.theta_scores.push_back(s);
        tr.delta_scores.push_back(restrict_to(((y - mu) * delta_score_weight(mu, kind_)) * z, delta_index_));
      }
    }
    resamples_ += survivors_.size();
  }
}

void BootstrapEnsemble::step(const Vec& z, const Vec& theta_prev, const Mat& correction) {
  if (z.size() != q_ || theta_prev.size() != q_) throw DimensionError("step: predictor has the wrong length");
  const bool corrected = correction.size() != 0;
  if (corrected && (correction.rows() != d_ || correction.cols() != q_)) {
    throw DimensionError("correction matrix must be d x q");
  }
  const double mu = sigmoid(theta_prev.dot(z));
  const double p = std::clamp(mu, kProbClamp, 1.0 - kProbClamp);
  const Vec zd = restrict_to(z, delta_index_);
  const double w = delta_score_weight(mu, kind_);
  // Scores take one of two values per observation.
  const Vec delta_score[2] = {((0.0 - mu) * w) * zd, ((1.0 - mu) * w) * zd};
  const Vec theta_score[2] = {(0.0 - mu) * z, (1.0 - mu) * z};
  for (int b : survivors_) {
    const int y = bernoulli(rngs_[static_cast<std::size_t>(b)], p);
    auto g = corrected_.col(b);
    g += delta_score[y];
    if (corrected) g.noalias() += correction * theta_sum_.col(b);
    pending_.col(b) += theta_score[y];
    if (tracing_) {
      auto& tr = traces_[static_cast<std::size_t>(b)];
      tr.delta_scores.push_back(delta_score[y]);
      tr.theta_scores.push_back(theta_score[y]);
    }
  }
  resamples_ += survivors_.size();
}

void BootstrapEnsemble::close_batch(Norm norm) {
  theta_sum_ += pending_;
  pending_.setZero();
  for (int b : survivors_) {
    const auto g = corrected_.col(b);
    double best = 0.0;
    for (const Mat& past : boundaries_) {
      const Vec diff = g - past.col(b);
      best = std::max(best, vector_norm(diff, norm));
    }
    stats_[static_cast<std::size_t>(b)] = best;
  }
  boundaries_.push_back(corrected_);
}

ControlLimit BootstrapEnsemble::update_control_limit(const SpendingFunction& sf, long t, long m) {
  if (m <= 0) throw ConfigError("non-contamination size m must be positive");
  const double v = static_cast<double>(t) / static_cast<double>(m);
  spent_alpha_ = alpha_spend(sf, v);
  const long cumulative = std::lround(static_cast<double>(B_) * spent_alpha_);
  ControlLimit out;
  out.target = static_cast<int>(std::max(0L, cumulative - eliminated_));
  out.adequacy_warning = out.target < 5;
  if (out.target > static_cast<int>(survivors_.size())) {
    throw SpendExhaustedError("alpha spending asks for " + std::to_string(out.target) + " eliminations but only " +
                              std::to_string(survivors_.size()) + " bootstrap sequences survive; increase B");
  }

  ControlLimit sel = threshold_for_target(survivors_, stats_, out.target);
  sel.adequacy_warning = out.adequacy_warning;
  if (sel.target == 0) return sel;
  std::vector<int> keep;
  keep.reserve(survivors_.size() - sel.eliminated.size());
  for (int b : survivors_) {
    if (std::find(sel.eliminated.begin(), sel.eliminated.end(), b) == sel.eliminated.end()) keep.push_back(b);
  }
  survivors_ = std::move(keep);
  eliminated_ += sel.target;
  return sel;
}

ControlLimit threshold_for_target(std::span<const int> survivors, std::span<const double> stats, int target) {
  ControlLimit out;
  out.target = target;
  std::vector<int> order(survivors.begin(), survivors.end());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = stats[static_cast<std::size_t>(a)];
    const double sb = stats[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  if (target > static_cast<int>(order.size())) throw SpendExhaustedError("more eliminations than survivors");

  if (target <= 0) {
    out.target = 0;
    out.h = std::numeric_limits<double>::infinity();
    out.h_report = order.empty() ? 0.0 : stats[static_cast<std::size_t>(order.front())];
    return out;
  }

  const auto n = static_cast<std::size_t>(target);
  out.eliminated.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  // Exactly n survivors exceed any h in [stat_(n+1), stat_(n)). Taking the top
  // of that interval makes the observed chart alarm only when it would rank
  // among the eliminated, so the per-batch alarm probability is n / (N + 1).
  const double top = stats[static_cast<std::size_t>(order[n - 1])];
  const double floor = n < order.size() ? stats[static_cast<std::size_t>(order[n])]
                                        : -std::numeric_limits<double>::infinity();
  out.h = std::max(floor, std::nextafter(top, -std::numeric_limits<double>::infinity()));
  out.h_report = out.h;
  return out;
}

BootstrapEnsemble step_ensemble(BootstrapEnsemble ens, const Vec& z, const Vec& theta_prev, const Mat& correction) {
  ens.step(z, theta_prev, correction);
  return ens;
}

std::pair<ControlLimit, BootstrapEnsemble> update_control_limit(BootstrapEnsemble ens, const SpendingFunction& sf,
                                                                long t, long m) {
  ControlLimit lim = ens.update_control_limit(sf, t, m);
  return {std::move(lim), std::move(ens)};
}

}  // namespace scusum
