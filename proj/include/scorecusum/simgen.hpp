#pragma once

#include "scorecusum/learners.hpp"
#include "scorecusum/rng.hpp"
#include "scorecusum/stream.hpp"
#include "scorecusum/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace scusum {

struct PatientRecord {
  long t = 0;
  Vec x;
  double x_tilde = 0.0;
  double u = 0.0;  // unmeasured confounder
  double prediction = 0.5;
  int a = 0;
  int y = 0;
  bool shifted = false;
  bool monitor_side = true;  // false when routed to the model-update stream
  long soc_index = 0;        // position in the monitoring SOC stream, 0 if not in it
};

/// Treatment assignment. Coefficients are ordered
/// [logit f(x), x_1..x_p, x_tilde, u, intercept].
struct TreatmentModel {
  enum class Kind { SingleLogistic, MaxOfTwo };
  Kind kind = Kind::SingleLogistic;
  Vec gamma1;
  Vec gamma2;
};

/// A treatment model that applies once the monitoring SOC index reaches `start`.
struct TreatmentPhase {
  long start = 1;
  TreatmentModel model;
};

/// Full generative description of one scenario.
///
/// Outcome coefficients are ordered [x_1..x_p, x_tilde, u, intercept].
/// Changepoint and schedule times are monitoring SOC indices: a patient is
/// generated under the post-change law when the index it would receive as a
/// monitored SOC observation is at least `kappa`.
struct ScenarioConfig {
  std::string name;
  int p = 8;
  ShiftKind outcome_kind = ShiftKind::LogitShift;
  Vec theta;
  Vec delta;
  std::optional<long> kappa;
  std::vector<TreatmentPhase> schedule;
  LearnerPolicy learner;
  long horizon = 0;  // monitoring SOC observations to produce
  std::uint64_t seed = 0;
  double monitor_fraction = 1.0;
  long max_patients = 0;  // 0 picks 100 * horizon + 1000
};

void validate(const ScenarioConfig& cfg);

/// Parses "(2,1,1,1,0_4,0,0,0)"; `v_k` repeats value v k times. Parentheses optional.
Vec parse_coefficients(const std::string& text);
/// Inverse of parse_coefficients; runs of two or more zeros use the `0_k` form.
std::string format_coefficients(const Vec& v);

/// Catalog names: ce_pred, ce_pred_xtilde, tc_pred, tc_pred_xtilde,
/// retrain_null_highdim, big_shift, small_shift, symmetric_shift,
/// highrisk_shift, trust_none, trust_calibrated, trust_over,
/// "<shift>+<trust>" combinations, tc_violation, tc_violation:<t'>,
/// naive_baseline. `m` and `K` place changepoints and propensity switches.
ScenarioConfig scenario_catalog(const std::string& name, long m = 100, double K = 4.0);
std::vector<std::string> catalog_names();

double treatment_propensity(const Vec& gamma, double prediction, const Vec& x, double x_tilde, double u);

/// Monitored SOC-side split decision for patient t; keyed so every consumer
/// of (seed, t) sees the same routing.
bool split_to_monitor(std::uint64_t seed, long t, double monitor_fraction);

/// Draws one patient. Covariates, treatment and outcome use separate
/// substreams keyed by (seed, t), so changing the treatment model leaves the
/// outcome draw untouched.
PatientRecord gen_patient(const ScenarioConfig& cfg, long t, const std::function<double(const Vec&)>& predictor,
                          const TreatmentModel& treatment, bool shifted);

/// Pretraining data for the learner, drawn from the pre-change population law.
TrainingSet pretraining_set(const ScenarioConfig& cfg);

struct SimulationResult {
  std::vector<PatientRecord> records;
  std::optional<long> kappa_abs;  // first patient generated under the post-change law
  long update_observations = 0;
  long learner_retrains = 0;
};

SimulationResult simulate(const ScenarioConfig& cfg);

/// Monitoring SOC stream: records with a = 0 on the monitor side, in arrival
/// order, with the predictor vector assembled per `conditioning`:
/// (logit f, 1) or (logit f, x_tilde, 1).
SocStream soc_filter(const std::vector<PatientRecord>& records, Conditioning conditioning);

Vec monitoring_predictor(double prediction, double x_tilde, Conditioning conditioning);

}  // namespace scusum
