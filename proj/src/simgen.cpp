#include "scorecusum/simgen.hpp"

#include "scorecusum/errors.hpp"
#include "scorecusum/models.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace scusum {

void validate(const ScenarioConfig& cfg) {
  if (cfg.p < 1) throw ConfigError("scenario needs at least one covariate");
  const Index q = cfg.p + 3;
  if (cfg.theta.size() != q) throw ConfigError("theta must have p + 3 entries");
  if (cfg.delta.size() != q) throw ConfigError("delta must have p + 3 entries");
  if (cfg.schedule.empty()) throw ConfigError("treatment schedule is empty");
  for (std::size_t k = 0; k < cfg.schedule.size(); ++k) {
    const auto& ph = cfg.schedule[k];
    if (k > 0 && ph.start <= cfg.schedule[k - 1].start) throw ConfigError("schedule start times must increase");
    if (ph.model.gamma1.size() != cfg.p + 4) throw ConfigError("treatment coefficients must have p + 4 entries");
    if (ph.model.kind == TreatmentModel::Kind::MaxOfTwo && ph.model.gamma2.size() != cfg.p + 4) {
      throw ConfigError("second treatment model must have p + 4 entries");
    }
  }
  if (!(cfg.monitor_fraction > 0.0 && cfg.monitor_fraction <= 1.0)) {
    throw ConfigError("monitor fraction must lie in (0, 1]");
  }
  if (cfg.horizon < 0) throw ConfigError("horizon must be nonnegative");
  validate(cfg.learner);
}

Vec parse_coefficients(const std::string& text) {
  std::string body;
  for (char c : text) {
    if (c != '(' && c != ')' && c != ' ') body.push_back(c);
  }
  std::vector<double> vals;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw ParseError("empty coefficient in '" + text + "'");
    const auto us = tok.find('_');
    std::size_t used = 0;
    try {
      if (us == std::string::npos) {
        vals.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw ParseError("bad coefficient '" + tok + "'");
      } else {
        const double v = std::stod(tok.substr(0, us), &used);
        if (used != us) throw ParseError("bad coefficient '" + tok + "'");
        const long count = std::stol(tok.substr(us + 1), &used);
        if (used != tok.size() - us - 1 || count < 0) throw ParseError("bad repeat count in '" + tok + "'");
        vals.insert(vals.end(), static_cast<std::size_t>(count), v);
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad coefficient '" + tok + "'");
    }
  }
  Vec out(static_cast<Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Index>(i)] = vals[i];
  return out;
}

std::string format_coefficients(const Vec& v) {
  std::ostringstream os;
  os << '(';
  bool first = true;
  for (Index i = 0; i < v.size();) {
    if (!first) os << ',';
    first = false;
    if (v[i] == 0.0) {
      Index j = i;
      while (j < v.size() && v[j] == 0.0) ++j;
      if (j - i >= 2) {
        os << "0_" << (j - i);
        i = j;
        continue;
      }
    }
    // Shortest form that parses back to the same double.
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
    os << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    ++i;
  }
  os << ')';
  return os.str();
}

double treatment_propensity(const Vec& gamma, double prediction, const Vec& x, double x_tilde, double u) {
  const Index p = x.size();
  if (gamma.size() != p + 4) throw DimensionError("treatment coefficients must have p + 4 entries");
  double eta = gamma[0] * logit(prediction) + gamma.segment(1, p).dot(x);
  eta += gamma[p + 1] * x_tilde + gamma[p + 2] * u + gamma[p + 3];
  return sigmoid(eta);
}

bool split_to_monitor(std::uint64_t seed, long t, double monitor_fraction) {
  if (monitor_fraction >= 1.0) return true;
  Engine eng = make_engine(seed, {stream::kSplit, static_cast<std::uint64_t>(t)});
  return uniform01(eng) < monitor_fraction;
}

namespace {

ModelParams outcome_params(const ScenarioConfig& cfg) {
  return ModelParams{cfg.theta, cfg.delta, cfg.outcome_kind, {}};
}

Vec outcome_predictor(const Vec& x, double x_tilde, double u) {
  const Index p = x.size();
  Vec z(p + 3);
  z.head(p) = x;
  z[p] = x_tilde;
  z[p + 1] = u;
  z[p + 2] = 1.0;
  return z;
}

void draw_covariates(Engine& eng, int p, Vec& x, double& x_tilde, double& u) {
  x.resize(p);
  for (int k = 0; k < p; ++k) x[k] = uniform(eng, -1.0, 1.0);
  x_tilde = uniform(eng, -1.0, 1.0);
  u = uniform(eng, -1.0, 1.0);
}

}  // namespace

PatientRecord gen_patient(const ScenarioConfig& cfg, long t, const std::function<double(const Vec&)>& predictor,
                          const TreatmentModel& treatment, bool shifted) {
  const auto key = static_cast<std::uint64_t>(t);
  PatientRecord rec;
  rec.t = t;
  rec.shifted = shifted;
  Engine cov = make_engine(cfg.seed, {stream::kCovariates, key});
  draw_covariates(cov, cfg.p, rec.x, rec.x_tilde, rec.u);
  rec.prediction = predictor(rec.x);

  Engine trt = make_engine(cfg.seed, {stream::kTreatment, key});
  rec.a = bernoulli(trt, treatment_propensity(treatment.gamma1, rec.prediction, rec.x, rec.x_tilde, rec.u));
  if (treatment.kind == TreatmentModel::Kind::MaxOfTwo) {
    const int a2 = bernoulli(trt, treatment_propensity(treatment.gamma2, rec.prediction, rec.x, rec.x_tilde, rec.u));
    rec.a = std::max(rec.a, a2);
  }

  // Y(0) is drawn whatever the treatment; treated outcomes never reach the monitor.
  Engine out = make_engine(cfg.seed, {stream::kOutcome, key});
  const double py = predict_prob(outcome_params(cfg), outcome_predictor(rec.x, rec.x_tilde, rec.u), shifted);
  rec.y = uniform01(out) < py ? 1 : 0;
  return rec;
}

TrainingSet pretraining_set(const ScenarioConfig& cfg) {
  const int n = cfg.learner.pretrain_size;
  TrainingSet ts;
  ts.x.resize(n, cfg.p);
  ts.y.resize(n);
  Engine eng = make_engine(cfg.seed, {stream::kPretrain});
  const ModelParams params = outcome_params(cfg);
  Vec x;
  double xt = 0.0;
  double u = 0.0;
  for (int i = 0; i < n; ++i) {
    draw_covariates(eng, cfg.p, x, xt, u);
    ts.x.row(i) = x.transpose();
    ts.y[i] = bernoulli(eng, predict_prob(params, outcome_predictor(x, xt, u), false));
  }
  return ts;
}

SimulationResult simulate(const ScenarioConfig& cfg) {
  validate(cfg);
  SimulationResult res;
  if (cfg.horizon == 0) return res;
  Learner learner(cfg.learner, pretraining_set(cfg));
  const auto predictor = [&learner](const Vec& x) { return learner.predict(x); };
  const long cap = cfg.max_patients > 0 ? cfg.max_patients : 100 * cfg.horizon + 1000;

  long soc_count = 0;
  std::size_t phase = 0;
  for (long t = 1; t <= cap && soc_count < cfg.horizon; ++t) {
    const long next_index = soc_count + 1;
    while (phase + 1 < cfg.schedule.size() && cfg.schedule[phase + 1].start <= next_index) ++phase;
    const bool shifted = cfg.kappa.has_value() && next_index >= *cfg.kappa;
    PatientRecord rec = gen_patient(cfg, t, predictor, cfg.schedule[phase].model, shifted);
    if (shifted && !res.kappa_abs) res.kappa_abs = t;
    rec.monitor_side = split_to_monitor(cfg.seed, t, cfg.monitor_fraction);
    if (rec.a == 0) {
      if (rec.monitor_side) {
        rec.soc_index = ++soc_count;
      } else {
        learner.observe(rec.x, rec.y);
        ++res.update_observations;
      }
    }
    res.records.push_back(std::move(rec));
  }
  res.learner_retrains = learner.retrain_count();
  return res;
}

Vec monitoring_predictor(double prediction, double x_tilde, Conditioning conditioning) {
  if (conditioning == Conditioning::PredictionOnly) {
    Vec z(2);
    z << logit(prediction), 1.0;
    return z;
  }
  Vec z(3);
  z << logit(prediction), x_tilde, 1.0;
  return z;
}

SocStream soc_filter(const std::vector<PatientRecord>& records, Conditioning conditioning) {
  SocStream out;
  long index = 0;
  for (const auto& r : records) {
    if (r.a != 0 || !r.monitor_side) continue;
    SocObservation s;
    s.t_abs = r.t;
    s.prediction = r.prediction;
    s.obs.z = monitoring_predictor(r.prediction, r.x_tilde, conditioning);
    s.obs.y = r.y;
    s.obs.t = ++index;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

TreatmentModel single(const std::string& g) {
  return {TreatmentModel::Kind::SingleLogistic, parse_coefficients(g), {}};
}

TreatmentModel max_of_two(const std::string& g1, const std::string& g2) {
  return {TreatmentModel::Kind::MaxOfTwo, parse_coefficients(g1), parse_coefficients(g2)};
}

ScenarioConfig base(const std::string& name, ShiftKind kind, const std::string& theta, const std::string& delta,
                    long horizon) {
  ScenarioConfig c;
  c.name = name;
  c.outcome_kind = kind;
  c.theta = parse_coefficients(theta);
  c.delta = parse_coefficients(delta);
  c.p = static_cast<int>(c.theta.size()) - 3;
  c.horizon = horizon;
  return c;
}

const char* kTheta = "(2,1,1,1,0_4,0,0,0)";
const char* kZero11 = "(0_11)";

ScenarioConfig shift_scenario(const std::string& name, long m, long horizon) {
  const bool big = name == "big_shift";
  const bool high = name == "highrisk_shift";
  const bool small_or_sym = name == "small_shift" || name == "symmetric_shift";
  if (!big && !high && !small_or_sym) throw ConfigError("unknown scenario '" + name + "'");
  const char* delta = big ? "(-1.6,-0.8,-0.8,-0.8,0_4,0,0,0)"
                          : high ? "(-1,-0.5,-0.5,-0.5,0_4,0,0,-0.75)" : "(-1,-0.5,-0.5,-0.5,0_4,0,0,0)";
  ScenarioConfig c = base(name, ShiftKind::LogitShift, kTheta, delta, horizon);
  c.kappa = m + 50;
  if (name == "big_shift" || name == "small_shift") {
    c.schedule = {{1, single("(0.15,0_8,0,0,0)")}};
    c.monitor_fraction = 0.6;
  } else {
    c.schedule = {{1, single("(1,0_8,0,0,0)")}};
  }
  return c;
}

const char* trust_gamma(const std::string& trust) {
  if (trust == "trust_none") return "(0.01,0_8,0,0,0)";
  if (trust == "trust_calibrated") return "(1,0_8,0,0,0)";
  if (trust == "trust_over") return "(5,0_8,0,0,0)";
  throw ConfigError("unknown trust level '" + trust + "'");
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"ce_pred",          "ce_pred_xtilde", "tc_pred",         "tc_pred_xtilde", "retrain_null_highdim",
          "big_shift",        "small_shift",    "symmetric_shift", "highrisk_shift", "trust_none",
          "trust_calibrated", "trust_over",     "tc_violation",    "naive_baseline"};
}

ScenarioConfig scenario_catalog(const std::string& name, long m, double K) {
  if (m < 1 || !(K > 1.0)) throw ConfigError("catalog needs m >= 1 and K > 1");
  const long horizon = static_cast<long>(std::floor(static_cast<double>(m) * K));
  const long half = horizon / 2 + 1;  // first SOC index after mK/2

  if (name == "ce_pred") {
    ScenarioConfig c = base(name, ShiftKind::LogitShift, kTheta, kZero11, horizon);
    c.schedule = {{1, single("(0.3,0_8,0,0,0)")}, {half, single("(0.6,0_8,0,0,0)")}};
    return c;
  }
  if (name == "ce_pred_xtilde") {
    ScenarioConfig c = base(name, ShiftKind::LogitShift, "(2,1,1,1,0_4,1,0,0)", kZero11, horizon);
    c.schedule = {{1, single("(0.3,0_8,0.1,0,0)")}, {half, single("(0.6,0_8,0.2,0,0)")}};
    return c;
  }
  if (name == "tc_pred") {
    ScenarioConfig c = base(name, ShiftKind::RiskShift, "(2,1,1,1,0_4,0,1,0)", kZero11, horizon);
    c.schedule = {{1, max_of_two("(0,0_8,0,1,-2)", "(0.2,0_8,0,0,0)")},
                  {half, max_of_two("(0,0_8,0,1,-2)", "(0.4,0_8,0,0,0)")}};
    return c;
  }
  if (name == "tc_pred_xtilde") {
    ScenarioConfig c = base(name, ShiftKind::RiskShift, "(2,1,1,1,0_4,1,1,0)", kZero11, horizon);
    c.schedule = {{1, max_of_two("(0,0_8,0,1,-2)", "(0.2,0_8,0.3,0,0)")},
                  {half, max_of_two("(0,0_8,0,1,-2)", "(0.4,0_8,0.6,0,0)")}};
    return c;
  }
  if (name == "retrain_null_highdim") {
    ScenarioConfig c = base(name, ShiftKind::LogitShift, "(2,1,1,0_47,0,0,0)", "(0_53)", horizon);
    c.schedule = {{1, single("(0.5,0_50,0,0,0)")}};
    c.learner.kind = LearnerKind::RidgeRetrain;
    c.learner.ridge_lambda = 1.0;
    c.monitor_fraction = 0.6;
    return c;
  }
  if (name == "tc_violation" || name.rfind("tc_violation:", 0) == 0) {
    ScenarioConfig c = base(name, ShiftKind::RiskShift, kTheta, "(-0.1,-0.02,0_6,0,0,0)", horizon);
    c.kappa = m + 100;
    const auto g1 = max_of_two("(0,0_8,0,1,-1)", "(0.8,0_8,0,0,0)");
    c.schedule = {{1, g1}};
    if (name != "tc_violation") {
      long onset = 0;
      try {
        onset = std::stol(name.substr(std::string("tc_violation:").size()));
      } catch (const std::logic_error&) {
        throw ConfigError("bad violation onset in '" + name + "'");
      }
      if (onset < 1) throw ConfigError("violation onset must be positive");
      c.schedule.push_back({m + onset, max_of_two("(-0.5,0_8,0,1,-1)", "(0.8,0_8,0,0,0)")});
    }
    return c;
  }
  if (name == "naive_baseline") {
    ScenarioConfig c = base(name, ShiftKind::LogitShift, kTheta, kZero11, horizon);
    c.schedule = {{1, single("(1,0_8,0,0,-0.5)")}, {200, single("(5,0_8,0,0,-2.5)")}};
    return c;
  }
  if (name.rfind("trust_", 0) == 0) {
    ScenarioConfig c = shift_scenario("symmetric_shift", m, horizon);
    c.name = name;
    c.schedule = {{1, single(trust_gamma(name))}};
    return c;
  }
  if (const auto plus = name.find('+'); plus != std::string::npos) {
    ScenarioConfig c = shift_scenario(name.substr(0, plus), m, horizon);
    c.name = name;
    c.schedule = {{1, single(trust_gamma(name.substr(plus + 1)))}};
    return c;
  }
  return shift_scenario(name, m, horizon);
}

}  // namespace scusum
