#pragma once

#include "scorecusum/types.hpp"

#include <span>
#include <vector>

namespace scusum {

enum class LearnerKind { Locked, RidgeRetrain, Ewaf, PlattWrapped };

const char* to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

struct LearnerPolicy {
  LearnerKind kind = LearnerKind::Locked;
  double ridge_lambda = 1.0;
  int retrain_every = 10;
  std::vector<int> ewaf_windows = {25, 50, 100, 0};  // 0 means all history
  double ewaf_eta = 0.5;
  double expert_ridge = 1.0;
  LearnerKind inner = LearnerKind::RidgeRetrain;  // what PlattWrapped recalibrates
  int pretrain_size = 200;
};

void validate(const LearnerPolicy& policy);

/// Logistic model on covariates x with a trailing intercept in `beta`.
struct LinearLogistic {
  Vec beta;
  double predict(const Vec& x) const;
};

/// Training data with one covariate row per observation (no intercept column).
struct TrainingSet {
  Mat x;
  Vec y;
};

LinearLogistic train_locked(const TrainingSet& data);

/// Ridge-penalized logistic fit; the intercept is never penalized.
LinearLogistic retrain_ridge(const TrainingSet& data, double lambda, const Vec* warm_start = nullptr);

struct PlattParams {
  double a = 1.0;
  double b = 0.0;
};

/// Logistic regression of outcomes on logit(scores). Throws SeparationError
/// for single-class outcomes or constant scores.
PlattParams platt_fit(std::span<const double> scores, std::span<const int> outcomes);
double platt_apply(const PlattParams& p, double score);

/// 1 when the predicted risk strictly exceeds `cutoff`.
int threshold_classify(double prob, double cutoff = 0.7);

/// Multiplicative-weights ensemble of logistic experts.
struct EwafState {
  std::vector<LinearLogistic> experts;
  Vec weights;  // nonnegative, sums to one
  double eta = 0.5;
};

double ewaf_predict(const EwafState& state, const Vec& x);
/// Multiplies each expert's weight by exp(-eta * logloss) and renormalizes.
EwafState ewaf_update(EwafState state, const Vec& x, int y);

/// A risk-prediction algorithm that may learn from the update stream.
class Learner {
 public:
  Learner(LearnerPolicy policy, TrainingSet pretrain);

  double predict(const Vec& x) const;
  /// Feeds one update-stream SOC observation; retrains on schedule.
  void observe(const Vec& x, int y);

  long observed() const { return observed_; }
  long retrain_count() const { return retrains_; }
  const LearnerPolicy& policy() const { return policy_; }
  const EwafState& ewaf() const { return ewaf_; }

 private:
  void retrain();
  TrainingSet window(int length) const;
  double inner_predict(const Vec& x) const;

  LearnerPolicy policy_;
  std::vector<Vec> xs_;
  std::vector<int> ys_;
  long observed_ = 0;
  long retrains_ = 0;
  LinearLogistic model_;
  EwafState ewaf_;
  PlattParams platt_;
};

}  // namespace scusum
