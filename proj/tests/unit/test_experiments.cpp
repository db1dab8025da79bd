#include "scorecusum/errors.hpp"
#include "scorecusum/experiments.hpp"
#include "scorecusum/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace scusum;

namespace {

ReplicateOutcome rep(std::optional<long> alarm, std::optional<long> kappa = std::nullopt) {
  ReplicateOutcome r;
  r.alarm_soc = alarm;
  r.kappa_soc = kappa;
  return r;
}

}  // namespace

TEST_CASE("alarm-time CDF steps at the alarm") {
  const auto m = summarize({rep(100)}, 400);
  REQUIRE(m.cdf_grid.size() == m.cdf.size());
  for (std::size_t i = 0; i < m.cdf_grid.size(); ++i) CHECK(m.cdf[i] == (m.cdf_grid[i] >= 100 ? 1.0 : 0.0));
  CHECK(m.cdf_grid.back() == 400);
  CHECK(m.false_alarm_rate == 1.0);
  CHECK_FALSE(m.power.has_value());
}

TEST_CASE("false alarms, power and delays") {
  const auto m = summarize({rep(50, 150), rep(170, 150), rep(std::nullopt, 150), rep(200, 150)}, 400);
  CHECK(m.n_valid == 4);
  CHECK(m.false_alarm_rate == 0.25);
  REQUIRE(m.power.has_value());
  CHECK(*m.power == 0.5);
  // Delays 20, 50 and one undetected (infinite).
  REQUIRE(m.delay_q25.has_value());
  CHECK(*m.delay_q25 == 20.0);
  CHECK(*m.delay_q50 == 50.0);
  CHECK_FALSE(m.delay_q75.has_value());
  CHECK(m.censored_mass == 0.25);
  CHECK(m.cdf.back() + m.censored_mass == doctest::Approx(1.0));
  for (std::size_t i = 1; i < m.cdf.size(); ++i) CHECK(m.cdf[i] >= m.cdf[i - 1]);
}

TEST_CASE("invalid replicates are excluded and empty summaries carry no metrics") {
  ReplicateOutcome bad = rep(10);
  bad.valid = false;
  const auto m = summarize({bad, rep(std::nullopt)}, 100);
  CHECK(m.n_valid == 1);
  CHECK(m.false_alarm_rate == 0.0);
  const auto empty = summarize({}, 100);
  CHECK(empty.n_valid == 0);
  CHECK(empty.cdf.empty());
  CHECK_FALSE(empty.median_alarm_time.has_value());
}

TEST_CASE("AUC") {
  const std::vector<double> p = {0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y = {0, 0, 1, 1};
  CHECK(auc(p, y) == 0.75);
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.3}, std::vector<int>{0, 1, 1}) == 1.0);
  CHECK(auc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), Error);

  Engine eng = make_engine(1, {1});
  std::vector<double> rp;
  std::vector<int> ry;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    rp.push_back(uniform01(eng));
    ry.push_back(bernoulli(eng, 0.5));
  }
  const long n1 = std::accumulate(ry.begin(), ry.end(), 0L);
  const double n0 = n - n1;
  const double se = std::sqrt((n0 + n1 + 1) / (12.0 * n0 * n1));
  CHECK(std::abs(auc(rp, ry) - 0.5) < 3 * se);
}

TEST_CASE("calibration bins") {
  const std::vector<double> p = {0.05, 0.15, 0.16, 0.95};
  const std::vector<int> y = {0, 1, 0, 1};
  const auto bins = calibration_bins(p, y, 10);
  REQUIRE(bins.size() == 10);
  CHECK(bins[0].count == 1);
  CHECK(bins[1].count == 2);
  CHECK(bins[1].mean_observed == 0.5);
  CHECK(bins[1].mean_predicted == doctest::Approx(0.155));
  CHECK(bins[9].count == 1);
  long total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == 4);
}

TEST_CASE("naive CUSUM recursion and static limit") {
  const std::vector<int> e = {1, 1, 0, 0, 1};
  const auto s = naive_cusum_path(e, 0.2, 0.05);
  REQUIRE(s.size() == 5);
  CHECK(s[0] == doctest::Approx(0.75));
  CHECK(s[1] == doctest::Approx(1.5));
  CHECK(s[2] == doctest::Approx(1.25));
  CHECK(s[3] == doctest::Approx(1.0));
  CHECK(s[4] == doctest::Approx(1.75));
  const double h = naive_static_limit(0.2, 0.05, 100, 0.1, 400, 3);
  CHECK(h > 0.0);
  CHECK(h == naive_static_limit(0.2, 0.05, 100, 0.1, 400, 3));
  CHECK(naive_static_limit(0.2, 0.05, 100, 0.5, 400, 3) <= h);
}

TEST_CASE("experiments are invariant to the number of worker threads") {
  ScenarioConfig sc = scenario_catalog("small_shift", 30, 4.0);
  MonitorConfig mc;
  mc.m = 30;
  mc.B = 60;
  mc.kind = ShiftKind::LogitShift;
  ExperimentSpec spec{sc, mc, 8, 21, 1, false};
  const ExperimentReport a = run_experiment(spec);
  spec.jobs = 4;
  const ExperimentReport b = run_experiment(spec);
  REQUIRE(a.replicates.size() == b.replicates.size());
  for (std::size_t i = 0; i < a.replicates.size(); ++i) {
    CHECK(a.replicates[i].alarm_soc == b.replicates[i].alarm_soc);
    CHECK(a.replicates[i].seed == b.replicates[i].seed);
  }
  CHECK(a.metrics.cdf == b.metrics.cdf);
  CHECK(a.auc_by_period.size() == 4);
  CHECK(a.calibration.size() == 10);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 3, [&](int i) { hit[static_cast<std::size_t>(i)] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 2, [](int i) {
                    if (i == 7) throw ConfigError("boom");
                  }),
                  ConfigError);
}
