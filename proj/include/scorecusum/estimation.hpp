#pragma once

#include "scorecusum/types.hpp"

#include <span>
#include <vector>

namespace scusum {

/// One monitored observation: predictor vector, binary outcome and its time index.
struct Observation {
  Vec z;
  int y = 0;
  long t = 0;
};

struct NewtonOptions {
  double tol = 1e-8;       // on the L2 norm of the (penalized) gradient
  int max_iter = 100;
  double ridge = 0.0;      // lambda in lambda/2 ||beta||^2
  bool penalize_last = true;  // false leaves the trailing intercept unpenalized
  double max_condition = 1e10;
  double fallback_ridge = 1e-6;
};

struct LogisticFit {
  Vec beta;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ridge_fallback = false;
};

/// Newton-Raphson for (optionally ridge-penalized) logistic regression.
///
/// Rows of `x` are predictor vectors. If the information matrix is singular
/// or its condition number exceeds `max_condition`, a ridge of
/// `fallback_ridge` is added and the fit continues from the current point.
/// Throws SeparationError when every outcome is in one class and the fit is
/// unpenalized, EstimationError when Newton fails to converge.
LogisticFit fit_logistic(const Mat& x, const Vec& y, const Vec& init, const NewtonOptions& opts = {});

/// Sequential maximum-likelihood state for the nuisance parameter.
struct MleState {
  Vec theta_hat;
  std::vector<Observation> data;
  double last_gradient_norm = 0.0;
  bool converged = false;
  bool ridge_fallback = false;
  long max_index = 0;  // largest time index the estimate has seen
};

/// Unpenalized logistic MLE on `observations`, started at `init`.
MleState fit(std::span<const Observation> observations, const Vec& init);

/// Appends `batch` and refits on everything seen so far, warm-started at the
/// previous estimate. An empty batch returns the state unchanged.
MleState sequential_update(MleState state, std::span<const Observation> batch);

/// Sum of score_theta over `observations` at `theta`.
Vec estimating_equation(std::span<const Observation> observations, const Vec& theta);

}  // namespace scusum
