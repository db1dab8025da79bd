#include "scorecusum/estimation.hpp"

#include "scorecusum/errors.hpp"
#include "scorecusum/models.hpp"

#include <cmath>
#include <string>

namespace scusum {

namespace {

struct Objective {
  double value;
  Vec grad;
  Mat hess;  // negative Hessian of the penalized log-likelihood
};

Objective evaluate(const Mat& x, const Vec& y, const Vec& beta, double ridge, bool penalize_last) {
  const Index q = beta.size();
  Vec eta = x * beta;
  Vec mu(eta.size());
  Vec w(eta.size());
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    mu[i] = sigmoid(eta[i]);
    w[i] = mu[i] * (1.0 - mu[i]);
    // log(1 + e^eta) computed stably
    const double softplus = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
    ll += y[i] * eta[i] - softplus;
  }
  Objective obj;
  obj.grad = x.transpose() * (y - mu);
  obj.hess = x.transpose() * w.asDiagonal() * x;
  if (ridge > 0.0) {
    Vec pen = beta;
    if (!penalize_last) pen[q - 1] = 0.0;
    ll -= 0.5 * ridge * pen.squaredNorm();
    obj.grad -= ridge * pen;
    for (Index k = 0; k < q; ++k) {
      if (penalize_last || k != q - 1) obj.hess(k, k) += ridge;
    }
  }
  obj.value = ll;
  return obj;
}

bool ill_conditioned(const Mat& h, double max_condition) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return true;
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return !(lo > 0.0) || hi / lo > max_condition;
}

}  // namespace

LogisticFit fit_logistic(const Mat& x, const Vec& y, const Vec& init, const NewtonOptions& opts) {
  const Index n = x.rows();
  const Index q = x.cols();
  if (init.size() != q) throw DimensionError("initial value has the wrong length");
  if (y.size() != n) throw DimensionError("outcome vector does not match design rows");
  if (!x.allFinite() || !init.allFinite()) throw NonFiniteError("non-finite input to logistic fit");
  const double ones = y.sum();
  if (opts.ridge <= 0.0 && (ones == 0.0 || ones == static_cast<double>(n))) {
    throw SeparationError("all outcomes are in one class; the logistic MLE does not exist");
  }

  LogisticFit out;
  out.beta = init;
  double ridge = opts.ridge;
  // An unpenalized fit that falls back to a ridge penalizes every coordinate.
  bool pen_last = opts.penalize_last;
  Objective obj = evaluate(x, y, out.beta, ridge, pen_last);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    out.grad_norm = obj.grad.norm();
    out.iterations = iter;
    if (out.grad_norm < opts.tol) {
      out.converged = true;
      return out;
    }
    if (!out.ridge_fallback && ill_conditioned(obj.hess, opts.max_condition)) {
      out.ridge_fallback = true;
      ridge += opts.fallback_ridge;
      pen_last = pen_last || opts.ridge <= 0.0;
      obj = evaluate(x, y, out.beta, ridge, pen_last);
      continue;
    }
    Eigen::LDLT<Mat> ldlt(obj.hess);
    Vec step = ldlt.solve(obj.grad);
    if (!step.allFinite()) throw EstimationError("Newton step is not finite");

    // Step halving keeps the objective from decreasing.
    double scale = 1.0;
    Objective next;
    Vec cand;
    for (int h = 0; h < 40; ++h) {
      cand = out.beta + scale * step;
      next = evaluate(x, y, cand, ridge, pen_last);
      if (std::isfinite(next.value) && next.value >= obj.value - 1e-12 * (1.0 + std::abs(obj.value))) break;
      scale *= 0.5;
    }
    out.beta = cand;
    obj = std::move(next);
  }
  out.grad_norm = obj.grad.norm();
  out.iterations = opts.max_iter;
  if (out.grad_norm < opts.tol) {
    out.converged = true;
    return out;
  }
  throw EstimationError("logistic Newton-Raphson did not converge: gradient norm " +
                        std::to_string(out.grad_norm));
}

namespace {

void design(std::span<const Observation> obs, Mat& x, Vec& y) {
  const Index q = obs.front().z.size();
  x.resize(static_cast<Index>(obs.size()), q);
  y.resize(static_cast<Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].z.size() != q) throw DimensionError("observations have inconsistent predictor lengths");
    x.row(static_cast<Index>(i)) = obs[i].z.transpose();
    y[static_cast<Index>(i)] = obs[i].y;
  }
}

MleState refit(MleState state, const Vec& init) {
  const auto& data = state.data;
  if (data.empty()) throw EstimationError("no observations to fit");
  const Index q = data.front().z.size();
  if (static_cast<Index>(data.size()) < q) {
    throw EstimationError("need at least " + std::to_string(q) + " observations, have " +
                          std::to_string(data.size()));
  }
  Mat x;
  Vec y;
  design(data, x, y);
  NewtonOptions opts;
  LogisticFit f;
  try {
    f = fit_logistic(x, y, init, opts);
  } catch (const EstimationError&) {
    // One more attempt from the origin with the fallback ridge switched on.
    opts.ridge = opts.fallback_ridge;
    f = fit_logistic(x, y, Vec::Zero(q), opts);
    f.ridge_fallback = true;
  }
  state.theta_hat = std::move(f.beta);
  state.last_gradient_norm = f.grad_norm;
  state.converged = f.converged;
  state.ridge_fallback = f.ridge_fallback;
  for (const auto& o : data) state.max_index = std::max(state.max_index, o.t);
  return state;
}

}  // namespace

MleState fit(std::span<const Observation> observations, const Vec& init) {
  MleState state;
  state.data.assign(observations.begin(), observations.end());
  return refit(std::move(state), init);
}

MleState sequential_update(MleState state, std::span<const Observation> batch) {
  if (batch.empty()) return state;
  state.data.insert(state.data.end(), batch.begin(), batch.end());
  Vec init = state.theta_hat;
  return refit(std::move(state), init);
}

Vec estimating_equation(std::span<const Observation> observations, const Vec& theta) {
  Vec total = Vec::Zero(theta.size());
  for (const auto& o : observations) total += score_theta(theta, o.z, o.y);
  return total;
}

}  // namespace scusum
