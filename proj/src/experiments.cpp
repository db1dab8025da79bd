#include "scorecusum/experiments.hpp"

#include "scorecusum/errors.hpp"
#include "scorecusum/estimation.hpp"
#include "scorecusum/learners.hpp"
#include "scorecusum/models.hpp"
#include "scorecusum/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace scusum {

std::uint64_t replicate_seed(std::uint64_t master, int r) {
  return derive_seed(master, {stream::kReplicate, static_cast<std::uint64_t>(r)});
}

std::uint64_t bootstrap_seed(std::uint64_t rep_seed) { return derive_seed(rep_seed, {stream::kBootstrap}); }

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  jobs = std::clamp(jobs, 1, n);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

Vec project_known_theta(const ScenarioConfig& scenario, Conditioning conditioning, long n) {
  validate(scenario);
  if (n < 1) throw ConfigError("projection sample size must be positive");
  Learner learner(scenario.learner, pretraining_set(scenario));
  const TreatmentModel& trt = scenario.schedule.front().model;
  const ModelParams params{scenario.theta, scenario.delta, scenario.outcome_kind, {}};
  // One sequential stream is enough here; per-patient keying only matters for paired designs.
  Engine eng = make_engine(scenario.seed, {stream::kProjection});
  const int p = scenario.p;
  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(n));
  Vec x(p);
  Vec z(p + 3);
  for (long t = 1; t <= n; ++t) {
    for (int k = 0; k < p; ++k) x[k] = uniform(eng, -1.0, 1.0);
    const double xt = uniform(eng, -1.0, 1.0);
    const double u = uniform(eng, -1.0, 1.0);
    const double pred = learner.predict(x);
    int a = bernoulli(eng, treatment_propensity(trt.gamma1, pred, x, xt, u));
    if (trt.kind == TreatmentModel::Kind::MaxOfTwo) {
      a = std::max(a, bernoulli(eng, treatment_propensity(trt.gamma2, pred, x, xt, u)));
    }
    z << x, xt, u, 1.0;
    const int y = bernoulli(eng, predict_prob(params, z, false));
    if (a != 0) continue;
    obs.push_back({monitoring_predictor(pred, xt, conditioning), y, t});
  }
  if (obs.empty()) throw StreamExhaustedError("projection sample has no untreated patients");
  const Index q = obs.front().z.size();
  return fit(obs, Vec::Zero(q)).theta_hat;
}

namespace {

struct Quantile {
  static std::optional<double> of(std::vector<double> v, double q) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    idx = idx == 0 ? 0 : idx - 1;
    const double x = v[std::min(idx, n - 1)];
    if (!std::isfinite(x)) return std::nullopt;
    return x;
  }
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-replicate learner diagnostics from the monitored predictions.
struct PredictionDiag {
  std::vector<double> auc;  // NaN when a period has one class
  std::vector<long> bin_count;
  std::vector<double> bin_pred;
  std::vector<double> bin_obs;
};

constexpr int kPeriods = 4;
constexpr int kBins = 10;

PredictionDiag prediction_diag(const SocStream& stream, long last) {
  PredictionDiag out;
  out.bin_count.assign(kBins, 0);
  out.bin_pred.assign(kBins, 0.0);
  out.bin_obs.assign(kBins, 0.0);
  const long n = std::min<long>(last, static_cast<long>(stream.size()));
  for (int p = 0; p < kPeriods; ++p) {
    const long lo = n * p / kPeriods;
    const long hi = n * (p + 1) / kPeriods;
    std::vector<double> pr;
    std::vector<int> ys;
    for (long i = lo; i < hi; ++i) {
      pr.push_back(stream[static_cast<std::size_t>(i)].prediction);
      ys.push_back(stream[static_cast<std::size_t>(i)].obs.y);
    }
    try {
      out.auc.push_back(auc(pr, ys));
    } catch (const Error&) {
      out.auc.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  for (long i = 0; i < n; ++i) {
    const double p = stream[static_cast<std::size_t>(i)].prediction;
    const int b = std::min(kBins - 1, static_cast<int>(p * kBins));
    ++out.bin_count[static_cast<std::size_t>(b)];
    out.bin_pred[static_cast<std::size_t>(b)] += p;
    out.bin_obs[static_cast<std::size_t>(b)] += stream[static_cast<std::size_t>(i)].obs.y;
  }
  return out;
}

void attach_learner_diag(ExperimentReport& report, const std::vector<PredictionDiag>& diags) {
  report.auc_by_period.assign(kPeriods, 0.0);
  std::vector<int> counts(kPeriods, 0);
  report.calibration.assign(kBins, {});
  for (int b = 0; b < kBins; ++b) {
    report.calibration[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / kBins;
    report.calibration[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / kBins;
  }
  for (const auto& d : diags) {
    if (d.auc.empty()) continue;
    for (int p = 0; p < kPeriods; ++p) {
      if (std::isfinite(d.auc[static_cast<std::size_t>(p)])) {
        report.auc_by_period[static_cast<std::size_t>(p)] += d.auc[static_cast<std::size_t>(p)];
        ++counts[static_cast<std::size_t>(p)];
      }
    }
    for (int b = 0; b < kBins; ++b) {
      auto& bin = report.calibration[static_cast<std::size_t>(b)];
      bin.count += d.bin_count[static_cast<std::size_t>(b)];
      bin.mean_predicted += d.bin_pred[static_cast<std::size_t>(b)];
      bin.mean_observed += d.bin_obs[static_cast<std::size_t>(b)];
    }
  }
  for (int p = 0; p < kPeriods; ++p) {
    auto& a = report.auc_by_period[static_cast<std::size_t>(p)];
    a = counts[static_cast<std::size_t>(p)] > 0 ? a / counts[static_cast<std::size_t>(p)]
                                                : std::numeric_limits<double>::quiet_NaN();
  }
  for (auto& bin : report.calibration) {
    if (bin.count > 0) {
      bin.mean_predicted /= static_cast<double>(bin.count);
      bin.mean_observed /= static_cast<double>(bin.count);
    }
  }
}

}  // namespace

ExperimentMetrics summarize(const std::vector<ReplicateOutcome>& reps, long horizon) {
  ExperimentMetrics m;
  std::vector<double> alarm_times;
  std::vector<double> delays;
  int false_alarms = 0;
  int alarms = 0;
  int detections = 0;
  bool any_kappa = false;
  for (const auto& r : reps) {
    if (!r.valid) continue;
    ++m.n_valid;
    const double kappa = r.kappa_soc ? static_cast<double>(*r.kappa_soc) : kInf;
    any_kappa = any_kappa || r.kappa_soc.has_value();
    const double alarm = r.alarm_soc ? static_cast<double>(*r.alarm_soc) : kInf;
    alarm_times.push_back(alarm);
    if (r.alarm_soc) ++alarms;
    if (alarm < kappa) {
      ++false_alarms;
    } else if (r.kappa_soc) {
      if (r.alarm_soc) ++detections;
      delays.push_back(alarm - kappa);
    }
  }
  if (m.n_valid == 0) return m;
  const double n = m.n_valid;
  m.false_alarm_rate = false_alarms / n;
  m.alarm_rate = alarms / n;
  if (any_kappa) m.power = detections / n;
  m.delay_q25 = Quantile::of(delays, 0.25);
  m.delay_q50 = Quantile::of(delays, 0.50);
  m.delay_q75 = Quantile::of(delays, 0.75);
  m.median_alarm_time = Quantile::of(alarm_times, 0.5);
  m.censored_mass = (n - alarms) / n;
  const long step = std::max(1L, horizon / 100);
  for (long g = step; g <= horizon; g += step) m.cdf_grid.push_back(g);
  if (m.cdf_grid.empty() || m.cdf_grid.back() != horizon) m.cdf_grid.push_back(horizon);
  for (long g : m.cdf_grid) {
    const auto hits = std::count_if(alarm_times.begin(), alarm_times.end(), [g](double a) { return a <= g; });
    m.cdf.push_back(static_cast<double>(hits) / n);
  }
  return m;
}

std::vector<ExperimentReport> run_paired(const ScenarioConfig& scenario, std::span<const MonitorConfig> monitors,
                                         std::span<const std::string> labels, int n_replicates, std::uint64_t seed,
                                         int jobs, bool keep_traces) {
  validate(scenario);
  if (labels.size() != monitors.size()) throw ConfigError("one label per monitor is required");
  for (const auto& mc : monitors) validate(mc);
  const std::size_t k = monitors.size();
  const auto n = static_cast<std::size_t>(std::max(0, n_replicates));
  std::vector<std::vector<ReplicateOutcome>> outcomes(k, std::vector<ReplicateOutcome>(n));
  std::vector<std::vector<PredictionDiag>> diags(k, std::vector<PredictionDiag>(n));

  parallel_for(n_replicates, jobs, [&](int r) {
    const std::uint64_t rs = replicate_seed(seed, r);
    ScenarioConfig sc = scenario;
    sc.seed = rs;
    SimulationResult sim;
    std::string sim_error;
    try {
      sim = simulate(sc);
    } catch (const Error& e) {
      sim_error = e.what();
    }
    for (std::size_t j = 0; j < k; ++j) {
      ReplicateOutcome& out = outcomes[j][static_cast<std::size_t>(r)];
      out.replicate = r;
      out.seed = rs;
      out.kappa_soc = sc.kappa;
      out.kappa_abs = sim.kappa_abs;
      if (!sim_error.empty()) {
        out.valid = false;
        out.error = sim_error;
        continue;
      }
      MonitorConfig cfg = monitors[j];
      cfg.seed = bootstrap_seed(rs);
      const SocStream stream = soc_filter(sim.records, cfg.conditioning);
      out.n_monitored = static_cast<long>(stream.size());
      try {
        if (cfg.theta_mode == ThetaMode::Known && cfg.known_theta.size() == 0) {
          cfg.known_theta = project_known_theta(sc, cfg.conditioning);
        }
        const MonitorResult res = run_monitor(cfg, stream);
        out.alarm_soc = res.alarm_time;
        out.alarm_abs = res.alarm_time_abs;
        if (keep_traces) out.trace = res.trace;
      } catch (const Error& e) {
        out.valid = false;
        out.error = e.what();
      }
      diags[j][static_cast<std::size_t>(r)] = prediction_diag(stream, horizon(cfg));
    }
  });

  std::vector<ExperimentReport> reports;
  for (std::size_t j = 0; j < k; ++j) {
    ExperimentReport rep;
    rep.scenario = scenario.name;
    rep.label = labels[j];
    rep.n_replicates = n_replicates;
    rep.replicates = std::move(outcomes[j]);
    rep.invalid_count =
        static_cast<int>(std::count_if(rep.replicates.begin(), rep.replicates.end(), [](const auto& o) { return !o.valid; }));
    rep.metrics = summarize(rep.replicates, horizon(monitors[j]));
    attach_learner_diag(rep, diags[j]);
    reports.push_back(std::move(rep));
  }
  return reports;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  const std::string label = to_string(spec.monitor.kind);
  auto reports = run_paired(spec.scenario, std::span<const MonitorConfig>(&spec.monitor, 1),
                            std::span<const std::string>(&label, 1), spec.n_replicates, spec.seed, spec.jobs,
                            spec.keep_traces);
  return std::move(reports.front());
}

std::vector<double> alarm_cdf(const ExperimentReport& report, std::span<const long> grid) {
  std::vector<double> out;
  const double n = report.metrics.n_valid;
  for (long g : grid) {
    if (n == 0) {
      out.push_back(0.0);
      continue;
    }
    const auto hits = std::count_if(report.replicates.begin(), report.replicates.end(), [g](const auto& r) {
      return r.valid && r.alarm_soc && *r.alarm_soc <= g;
    });
    out.push_back(static_cast<double>(hits) / n);
  }
  return out;
}

double auc(std::span<const double> predictions, std::span<const int> outcomes) {
  if (predictions.size() != outcomes.size()) throw DimensionError("AUC needs paired data");
  const std::size_t n = predictions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && predictions[order[j + 1]] == predictions[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error("AUC is undefined when only one class is present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::vector<CalibrationBin> calibration_bins(std::span<const double> predictions, std::span<const int> outcomes,
                                             int n_bins) {
  if (predictions.size() != outcomes.size()) throw DimensionError("calibration needs paired data");
  if (n_bins < 1) throw ConfigError("need at least one bin");
  std::vector<CalibrationBin> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / n_bins;
    bins[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / n_bins;
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int b = std::clamp(static_cast<int>(predictions[i] * n_bins), 0, n_bins - 1);
    auto& bin = bins[static_cast<std::size_t>(b)];
    ++bin.count;
    bin.mean_predicted += predictions[i];
    bin.mean_observed += outcomes[i];
  }
  for (auto& bin : bins) {
    if (bin.count > 0) {
      bin.mean_predicted /= static_cast<double>(bin.count);
      bin.mean_observed /= static_cast<double>(bin.count);
    }
  }
  return bins;
}

std::vector<double> naive_cusum_path(std::span<const int> errors, double p0, double k) {
  std::vector<double> path;
  path.reserve(errors.size());
  double s = 0.0;
  for (int e : errors) {
    s = std::max(0.0, s + static_cast<double>(e) - p0 - k);
    path.push_back(s);
  }
  return path;
}

double naive_static_limit(double p0, double k, long length, double alpha, int B, std::uint64_t seed) {
  if (B < 1 || length < 1) throw ConfigError("naive limit needs B >= 1 and a positive horizon");
  std::vector<double> maxima;
  maxima.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    Engine eng = make_engine(seed, {stream::kNaiveBootstrap, static_cast<std::uint64_t>(b)});
    double s = 0.0;
    double best = 0.0;
    for (long t = 0; t < length; ++t) {
      s = std::max(0.0, s + bernoulli(eng, p0) - p0 - k);
      best = std::max(best, s);
    }
    maxima.push_back(best);
  }
  std::sort(maxima.begin(), maxima.end());
  auto idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * B));
  idx = idx == 0 ? 0 : idx - 1;
  return maxima[std::min(idx, maxima.size() - 1)];
}

NaiveComparison naive_cusum_baseline(const ScenarioConfig& scenario, const MonitorConfig& cfg, int n_replicates,
                                     std::uint64_t seed, int jobs, double allowance) {
  const std::string score_label = "score";
  NaiveComparison out;
  out.score = std::move(run_paired(scenario, std::span<const MonitorConfig>(&cfg, 1),
                                   std::span<const std::string>(&score_label, 1), n_replicates, seed, jobs)
                            .front());

  const auto n = static_cast<std::size_t>(std::max(0, n_replicates));
  std::vector<ReplicateOutcome> naive(n);
  const long last = horizon(cfg);
  parallel_for(n_replicates, jobs, [&](int r) {
    ReplicateOutcome& o = naive[static_cast<std::size_t>(r)];
    o.replicate = r;
    o.seed = replicate_seed(seed, r);
    ScenarioConfig sc = scenario;
    sc.seed = o.seed;
    o.kappa_soc = sc.kappa;
    try {
      const SimulationResult sim = simulate(sc);
      o.kappa_abs = sim.kappa_abs;
      const SocStream stream = soc_filter(sim.records, cfg.conditioning);
      o.n_monitored = static_cast<long>(stream.size());
      if (static_cast<long>(stream.size()) < cfg.m) throw StreamExhaustedError("stream shorter than m");
      const long end = std::min<long>(last, static_cast<long>(stream.size()));
      std::vector<int> errors;
      for (long i = 0; i < end; ++i) {
        const auto& s = stream[static_cast<std::size_t>(i)];
        errors.push_back(threshold_classify(s.prediction) != s.obs.y ? 1 : 0);
      }
      const double p0 =
          std::accumulate(errors.begin(), errors.begin() + cfg.m, 0.0) / static_cast<double>(cfg.m);
      const double h = naive_static_limit(p0, allowance, last - cfg.m, cfg.alpha, cfg.B, bootstrap_seed(o.seed));
      const auto path = naive_cusum_path(std::span<const int>(errors).subspan(static_cast<std::size_t>(cfg.m)), p0,
                                         allowance);
      for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i] > h) {
          o.alarm_soc = cfg.m + static_cast<long>(i) + 1;
          o.alarm_abs = stream[static_cast<std::size_t>(*o.alarm_soc - 1)].t_abs;
          break;
        }
      }
    } catch (const Error& e) {
      o.valid = false;
      o.error = e.what();
    }
  });
  out.naive.scenario = scenario.name;
  out.naive.label = "naive";
  out.naive.n_replicates = n_replicates;
  out.naive.replicates = std::move(naive);
  out.naive.invalid_count = static_cast<int>(
      std::count_if(out.naive.replicates.begin(), out.naive.replicates.end(), [](const auto& o) { return !o.valid; }));
  out.naive.metrics = summarize(out.naive.replicates, last);
  return out;
}

}  // namespace scusum
