#include "scorecusum/monitor.hpp"

#include "scorecusum/chart.hpp"
#include "scorecusum/errors.hpp"
#include "scorecusum/estimation.hpp"
#include "scorecusum/models.hpp"

#include <cmath>
#include <string>

namespace scusum {

void validate(const MonitorConfig& cfg) {
  if (cfg.m < 1) throw ConfigError("m must be positive");
  if (!(cfg.K > 1.0)) throw ConfigError("K must exceed 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (cfg.B < 1) throw ConfigError("B must be positive");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
}

long horizon(const MonitorConfig& cfg) {
  return static_cast<long>(std::floor(static_cast<double>(cfg.m) * cfg.K + 1e-9));
}

MonitorResult run_monitor(const MonitorConfig& cfg, const SocStream& stream) {
  validate(cfg);
  const long m = cfg.m;
  if (static_cast<long>(stream.size()) < m) {
    throw StreamExhaustedError("stream has " + std::to_string(stream.size()) + " observations but m = " +
                               std::to_string(m));
  }
  const Index q = stream.front().obs.z.size();
  const Index d = cfg.delta_index.empty() ? q : static_cast<Index>(cfg.delta_index.size());
  const bool known = cfg.theta_mode == ThetaMode::Known;
  if (known && cfg.known_theta.size() == 0) throw ConfigError("known-theta mode needs theta_0");
  if (known && cfg.known_theta.size() != q) throw DimensionError("theta_0 length differs from the predictor");
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].obs.t != static_cast<long>(i) + 1) {
      throw Error("SOC stream indices must run 1, 2, ... in order");
    }
  }

  MonitorResult res;
  auto& diag = res.diagnostics;
  const long last = std::min<long>(horizon(cfg), static_cast<long>(stream.size()));
  const SpendingFunction sf{cfg.alpha, cfg.K};

  std::vector<Observation> window;
  std::vector<Vec> window_z;
  for (long i = 0; i < m; ++i) {
    window.push_back(stream[static_cast<std::size_t>(i)].obs);
    window_z.push_back(stream[static_cast<std::size_t>(i)].obs.z);
    diag.consumed_abs.push_back(stream[static_cast<std::size_t>(i)].t_abs);
  }

  MleState mle;
  if (known) {
    mle.theta_hat = cfg.known_theta;
  } else {
    mle = fit(window, Vec::Zero(q));
    ++diag.refits;
    if (mle.ridge_fallback) ++diag.ridge_fallbacks;
  }

  BootstrapEnsemble ens(cfg.B, cfg.seed, q, d, cfg.kind, cfg.delta_index);
  if (!known) ens.initialize(window_z, mle.theta_hat);

  ScorePrefix observed(m + 1);
  const Mat no_correction;
  for (long a = m + 1; a <= last; a += cfg.batch_size) {
    const long b = std::min(last, a + cfg.batch_size - 1);
    const Vec theta_prev = mle.theta_hat;

    // Cumulative information over indices before the batch, at the current estimate.
    Mat lambda_inv;
    if (!known) {
      Mat lambda = Mat::Zero(q, q);
      for (long j = 1; j < a; ++j) lambda += info_theta(theta_prev, stream[static_cast<std::size_t>(j - 1)].obs.z);
      bool jittered = false;
      lambda_inv = inverse_information(lambda, &jittered);
      if (jittered) ++diag.information_jitters;
    }

    Vec batch_sum = Vec::Zero(d);
    std::vector<Observation> batch;
    for (long i = a; i <= b; ++i) {
      const auto& so = stream[static_cast<std::size_t>(i - 1)];
      diag.consumed_abs.push_back(so.t_abs);
      if (known) {
        batch_sum += known_score(so.obs, theta_prev, cfg.kind, cfg.delta_index);
        ens.step(so.obs.z, theta_prev, no_correction);
      } else {
        diag.audit.push_back({i, mle.max_index});
        batch_sum += plugin_score(so.obs, mle, cfg.kind, cfg.delta_index);
        const Mat correction = cross_info(theta_prev, so.obs.z, cfg.kind, cfg.delta_index) * lambda_inv;
        ens.step(so.obs.z, theta_prev, correction);
        batch.push_back(so.obs);
      }
    }

    observed.append(batch_sum);
    const double chart = observed.cusum_stat(cfg.norm);
    ens.close_batch(cfg.norm);
    const ControlLimit lim = ens.update_control_limit(sf, b, m);
    if (lim.adequacy_warning) ++diag.adequacy_warnings;

    TraceRow row;
    row.t = b;
    row.t_abs = stream[static_cast<std::size_t>(b - 1)].t_abs;
    row.chart = chart;
    row.h = lim.h_report;
    row.limit_active = std::isfinite(lim.h) || lim.h < 0;
    row.survivors = static_cast<int>(ens.survivors().size());
    row.theta_norm = theta_prev.norm();
    res.trace.push_back(row);

    if (chart > lim.h) {
      res.alarm_time = b;
      res.alarm_time_abs = row.t_abs;
      break;
    }
    if (!known && b < last) {
      mle = sequential_update(std::move(mle), batch);
      ++diag.refits;
      if (mle.ridge_fallback) ++diag.ridge_fallbacks;
    }
  }

  res.final_theta_hat = mle.theta_hat;
  diag.eliminated = ens.eliminated();
  diag.resamples = ens.resample_count();
  return res;
}

std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> split_stream(
    const std::vector<PatientRecord>& records, double monitor_fraction, std::uint64_t seed) {
  if (!(monitor_fraction > 0.0 && monitor_fraction <= 1.0)) throw ConfigError("monitor fraction must lie in (0, 1]");
  std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> out;
  for (const auto& r : records) {
    PatientRecord copy = r;
    copy.monitor_side = split_to_monitor(seed, r.t, monitor_fraction);
    (copy.monitor_side ? out.first : out.second).push_back(std::move(copy));
  }
  return out;
}

}  // namespace scusum
