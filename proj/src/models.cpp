#include "scorecusum/models.hpp"

#include "scorecusum/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace scusum {

const char* to_string(ShiftKind kind) {
  return kind == ShiftKind::LogitShift ? "logit" : "risk";
}

const char* to_string(Norm norm) { return norm == Norm::L1 ? "l1" : "l2"; }

const char* to_string(Conditioning c) {
  return c == Conditioning::PredictionOnly ? "pred" : "pred+xt";
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return std::log(p) - std::log1p(-p);
}

void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
}

namespace {

void check_dims(const Vec& theta, const Vec& z) {
  if (theta.size() != z.size()) {
    throw DimensionError("theta has length " + std::to_string(theta.size()) + " but z has length " +
                         std::to_string(z.size()));
  }
  check_finite(theta, "theta");
  check_finite(z, "z");
}

void check_index(std::span<const Index> idx, Index q) {
  for (Index k : idx) {
    if (k < 0 || k >= q) throw DimensionError("delta index " + std::to_string(k) + " out of range");
  }
}

// Restricts the rows of a q-vector to the delta coordinates.
Vec restrict(const Vec& full, std::span<const Index> idx) {
  if (idx.empty()) return full;
  Vec out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = full[idx[k]];
  return out;
}

Mat restrict_rows(const Mat& full, std::span<const Index> idx) {
  if (idx.empty()) return full;
  Mat out(static_cast<Index>(idx.size()), full.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = full.row(idx[k]);
  return out;
}

void check_binary(int y) {
  if (y != 0 && y != 1) throw Error("outcome must be 0 or 1, got " + std::to_string(y));
}

}  // namespace

Vec expand_delta(const ModelParams& params) {
  const Index q = params.theta.size();
  if (params.delta_index.empty()) {
    if (params.delta.size() != q) {
      throw DimensionError("full-length delta must match theta length");
    }
    return params.delta;
  }
  if (params.delta_index.size() != static_cast<std::size_t>(params.delta.size())) {
    throw DimensionError("delta index map and delta differ in length");
  }
  check_index(params.delta_index, q);
  Vec full = Vec::Zero(q);
  for (std::size_t k = 0; k < params.delta_index.size(); ++k) {
    Index target = params.delta_index[k];
    if (std::count(params.delta_index.begin(), params.delta_index.end(), target) > 1) {
      throw DimensionError("delta index map must be injective");
    }
    full[target] = params.delta[static_cast<Index>(k)];
  }
  return full;
}

double predict_prob(const ModelParams& params, const Vec& z, bool shifted) {
  check_dims(params.theta, z);
  check_finite(params.delta, "delta");
  const double eta = params.theta.dot(z);
  if (!shifted) return sigmoid(eta);
  const Vec delta = expand_delta(params);
  if (params.kind == ShiftKind::LogitShift) return sigmoid(eta + delta.dot(z));
  return std::clamp(sigmoid(eta) + delta.dot(z), 0.0, 1.0);
}

double log_likelihood(const ModelParams& params, const Vec& z, int y, bool shifted) {
  check_binary(y);
  const double p = std::clamp(predict_prob(params, z, shifted), kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? std::log(p) : std::log1p(-p);
}

Vec score_theta(const Vec& theta, const Vec& z, int y) {
  check_dims(theta, z);
  check_binary(y);
  const double mu = sigmoid(theta.dot(z));
  return (static_cast<double>(y) - mu) * z;
}

double delta_score_weight(double mu, ShiftKind kind) {
  if (kind == ShiftKind::LogitShift) return 1.0;
  const double v = mu * (1.0 - mu);
  if (!(v > 0.0)) throw DegenerateProbabilityError("risk-scale score needs 0 < mu < 1");
  return 1.0 / v;
}

Vec score_delta(const Vec& theta, const Vec& z, int y, ShiftKind kind,
                std::span<const Index> delta_index) {
  check_dims(theta, z);
  check_binary(y);
  check_index(delta_index, z.size());
  const double mu = sigmoid(theta.dot(z));
  const double w = delta_score_weight(mu, kind);
  return restrict(((static_cast<double>(y) - mu) * w) * z, delta_index);
}

Mat info_theta(const Vec& theta, const Vec& z) {
  check_dims(theta, z);
  const double mu = sigmoid(theta.dot(z));
  return (mu * (1.0 - mu)) * (z * z.transpose());
}

Mat cross_info(const Vec& theta, const Vec& z, ShiftKind kind, std::span<const Index> delta_index) {
  check_dims(theta, z);
  check_index(delta_index, z.size());
  const double mu = sigmoid(theta.dot(z));
  Mat zz = z * z.transpose();
  if (kind == ShiftKind::LogitShift) {
    zz *= -mu * (1.0 - mu);
  } else {
    if (!(mu > 0.0 && mu < 1.0)) throw DegenerateProbabilityError("risk-scale cross information needs 0 < mu < 1");
    zz = -zz;
  }
  return restrict_rows(zz, delta_index);
}

}  // namespace scusum
