#pragma once

#include "scorecusum/types.hpp"

#include <span>
#include <vector>

namespace scusum {

/// Pre-change parameter theta, shift delta and the way delta enters the model.
///
/// `delta_index[k]` names the predictor coordinate that `delta[k]` multiplies.
/// An empty index map means delta is full length and aligned with z.
struct ModelParams {
  Vec theta;
  Vec delta;
  ShiftKind kind = ShiftKind::LogitShift;
  std::vector<Index> delta_index;
};

/// Clamp used wherever a probability feeds a logarithm.
inline constexpr double kProbClamp = 1e-12;

double sigmoid(double x);
/// log(p / (1 - p)) with p clamped to [kProbClamp, 1 - kProbClamp].
double logit(double p);

/// Expands delta into a length-q vector through the index map.
Vec expand_delta(const ModelParams& params);

/// P(Y = 1 | z) under the pre-change law, or the post-change law when `shifted`.
double predict_prob(const ModelParams& params, const Vec& z, bool shifted);

/// Bernoulli log-likelihood with the probability clamped away from 0 and 1.
double log_likelihood(const ModelParams& params, const Vec& z, int y, bool shifted);

/// Gradient of log p with respect to theta at delta = 0. Same for both kinds.
Vec score_theta(const Vec& theta, const Vec& z, int y);

/// Gradient of log p with respect to delta at delta = 0, restricted to the
/// delta coordinates. Throws DegenerateProbabilityError for RiskShift when
/// sigmoid(theta'z) rounds to 0 or 1.
Vec score_delta(const Vec& theta, const Vec& z, int y, ShiftKind kind,
                std::span<const Index> delta_index = {});

/// Expected negative Hessian in theta for one observation: mu (1 - mu) z z'.
Mat info_theta(const Vec& theta, const Vec& z);

/// E[ d/dtheta d/ddelta log p | z ] at delta = 0, rows restricted to delta coordinates.
Mat cross_info(const Vec& theta, const Vec& z, ShiftKind kind,
               std::span<const Index> delta_index = {});

/// Multiplier w(mu) such that score_delta = (y - mu) * w * z[delta_index].
/// 1 for LogitShift, 1 / (mu (1 - mu)) for RiskShift.
double delta_score_weight(double mu, ShiftKind kind);

void check_finite(const Vec& v, const char* what);

}  // namespace scusum
