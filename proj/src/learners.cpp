#include "scorecusum/learners.hpp"

#include "scorecusum/errors.hpp"
#include "scorecusum/estimation.hpp"
#include "scorecusum/models.hpp"

#include <algorithm>
#include <cmath>

namespace scusum {

const char* to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Locked: return "locked";
    case LearnerKind::RidgeRetrain: return "ridge";
    case LearnerKind::Ewaf: return "ewaf";
    case LearnerKind::PlattWrapped: return "platt";
  }
  return "locked";
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "locked") return LearnerKind::Locked;
  if (s == "ridge") return LearnerKind::RidgeRetrain;
  if (s == "ewaf") return LearnerKind::Ewaf;
  if (s == "platt") return LearnerKind::PlattWrapped;
  throw ConfigError("unknown learner kind '" + s + "'");
}

void validate(const LearnerPolicy& policy) {
  if (policy.retrain_every < 1) throw ConfigError("retrain_every must be at least 1");
  if (!(policy.ewaf_eta > 0.0)) throw ConfigError("EWAF eta must be positive");
  if (policy.ridge_lambda < 0.0 || policy.expert_ridge < 0.0) throw ConfigError("ridge penalties must be nonnegative");
  if (policy.kind == LearnerKind::Ewaf && policy.ewaf_windows.empty()) throw ConfigError("EWAF needs experts");
  if (policy.kind == LearnerKind::PlattWrapped && policy.inner == LearnerKind::PlattWrapped) {
    throw ConfigError("Platt wrapper cannot wrap itself");
  }
  if (policy.pretrain_size < 2) throw ConfigError("pretraining set too small");
}

double LinearLogistic::predict(const Vec& x) const {
  const Index p = beta.size() - 1;
  if (x.size() != p) throw DimensionError("learner input has the wrong length");
  return sigmoid(beta.head(p).dot(x) + beta[p]);
}

namespace {

Mat with_intercept(const Mat& x) {
  Mat out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

double log_loss(double p, int y) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(p) : -std::log1p(-p);
}

}  // namespace

LinearLogistic train_locked(const TrainingSet& data) {
  const Mat x = with_intercept(data.x);
  LogisticFit f;
  try {
    f = fit_logistic(x, data.y, Vec::Zero(x.cols()));
  } catch (const EstimationError&) {
    NewtonOptions opts;
    opts.ridge = opts.fallback_ridge;
    f = fit_logistic(x, data.y, Vec::Zero(x.cols()), opts);
  }
  return {f.beta};
}

LinearLogistic retrain_ridge(const TrainingSet& data, double lambda, const Vec* warm_start) {
  const Mat x = with_intercept(data.x);
  NewtonOptions opts;
  opts.ridge = lambda;
  opts.penalize_last = false;
  Vec init = warm_start && warm_start->size() == x.cols() ? *warm_start : Vec::Zero(x.cols());
  if (lambda <= 0.0) return train_locked(data);
  return {fit_logistic(x, data.y, init, opts).beta};
}

PlattParams platt_fit(std::span<const double> scores, std::span<const int> outcomes) {
  if (scores.size() != outcomes.size() || scores.empty()) throw DimensionError("Platt fit needs paired, nonempty data");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) throw SeparationError("Platt scaling is undefined for constant scores");
  const auto n = static_cast<Index>(scores.size());
  Mat x(n, 2);
  Vec y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = logit(scores[static_cast<std::size_t>(i)]);
    x(i, 1) = 1.0;
    y[i] = outcomes[static_cast<std::size_t>(i)];
  }
  const LogisticFit f = fit_logistic(x, y, Vec::Zero(2));
  return {f.beta[0], f.beta[1]};
}

double platt_apply(const PlattParams& p, double score) { return sigmoid(p.a * logit(score) + p.b); }

int threshold_classify(double prob, double cutoff) { return prob > cutoff ? 1 : 0; }

double ewaf_predict(const EwafState& state, const Vec& x) {
  if (state.experts.empty()) throw ConfigError("EWAF expert pool is empty");
  double p = 0.0;
  for (std::size_t k = 0; k < state.experts.size(); ++k) {
    p += state.weights[static_cast<Index>(k)] * state.experts[k].predict(x);
  }
  return p;
}

EwafState ewaf_update(EwafState state, const Vec& x, int y) {
  for (std::size_t k = 0; k < state.experts.size(); ++k) {
    const double loss = log_loss(state.experts[k].predict(x), y);
    state.weights[static_cast<Index>(k)] *= std::exp(-state.eta * loss);
  }
  const double total = state.weights.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    state.weights.setConstant(1.0 / static_cast<double>(state.weights.size()));
  } else {
    state.weights /= total;
  }
  return state;
}

Learner::Learner(LearnerPolicy policy, TrainingSet pretrain) : policy_(std::move(policy)) {
  validate(policy_);
  for (Index i = 0; i < pretrain.x.rows(); ++i) {
    xs_.push_back(pretrain.x.row(i).transpose());
    ys_.push_back(static_cast<int>(pretrain.y[i]));
  }
  model_ = train_locked(pretrain);
  if (policy_.kind == LearnerKind::Ewaf) {
    const auto k = policy_.ewaf_windows.size();
    ewaf_.experts.assign(k, model_);
    ewaf_.weights = Vec::Constant(static_cast<Index>(k), 1.0 / static_cast<double>(k));
    ewaf_.eta = policy_.ewaf_eta;
  }
}

double Learner::inner_predict(const Vec& x) const {
  if (policy_.kind == LearnerKind::Ewaf) return ewaf_predict(ewaf_, x);
  return model_.predict(x);
}

double Learner::predict(const Vec& x) const {
  const double p = inner_predict(x);
  return policy_.kind == LearnerKind::PlattWrapped ? platt_apply(platt_, p) : p;
}

TrainingSet Learner::window(int length) const {
  const std::size_t n = xs_.size();
  const std::size_t take = length <= 0 ? n : std::min(n, static_cast<std::size_t>(length));
  TrainingSet out;
  out.x.resize(static_cast<Index>(take), xs_.front().size());
  out.y.resize(static_cast<Index>(take));
  for (std::size_t i = 0; i < take; ++i) {
    out.x.row(static_cast<Index>(i)) = xs_[n - take + i].transpose();
    out.y[static_cast<Index>(i)] = ys_[n - take + i];
  }
  return out;
}

void Learner::retrain() {
  ++retrains_;
  switch (policy_.kind) {
    case LearnerKind::Locked:
      return;
    case LearnerKind::RidgeRetrain:
      model_ = retrain_ridge(window(0), policy_.ridge_lambda, &model_.beta);
      return;
    case LearnerKind::Ewaf:
      for (std::size_t k = 0; k < ewaf_.experts.size(); ++k) {
        ewaf_.experts[k] = retrain_ridge(window(policy_.ewaf_windows[k]), policy_.expert_ridge, &ewaf_.experts[k].beta);
      }
      return;
    case LearnerKind::PlattWrapped: {
      const TrainingSet all = window(0);
      model_ = retrain_ridge(all, policy_.ridge_lambda, &model_.beta);
      // Recalibrate on the update-stream observations only.
      const auto n_update = static_cast<std::size_t>(std::min<long>(observed_, static_cast<long>(xs_.size())));
      std::vector<double> scores;
      std::vector<int> outcomes;
      for (std::size_t i = xs_.size() - n_update; i < xs_.size(); ++i) {
        scores.push_back(model_.predict(xs_[i]));
        outcomes.push_back(ys_[i]);
      }
      try {
        platt_ = platt_fit(scores, outcomes);
      } catch (const Error&) {
        platt_ = {};
      }
      return;
    }
  }
}

void Learner::observe(const Vec& x, int y) {
  if (policy_.kind == LearnerKind::Locked) return;
  if (policy_.kind == LearnerKind::Ewaf) ewaf_ = ewaf_update(std::move(ewaf_), x, y);
  xs_.push_back(x);
  ys_.push_back(y);
  ++observed_;
  if (observed_ % policy_.retrain_every == 0) retrain();
}

}  // namespace scusum
