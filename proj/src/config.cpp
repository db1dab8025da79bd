#include "scorecusum/config.hpp"

#include "scorecusum/errors.hpp"
#include "scorecusum/io.hpp"

#include <fstream>
#include <set>

namespace scusum {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& section) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in section '" + section + "'");
  }
}

Vec coefficients(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_string()) return parse_coefficients(v.get<std::string>());
  if (!v.is_array()) throw ConfigError("'" + std::string(key) + "' must be a string or an array");
  Vec out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError("'" + std::string(key) + "' must hold numbers");
    out[static_cast<Index>(i)] = v[i].get<double>();
  }
  return out;
}

LearnerPolicy parse_learner(const json& j) {
  reject_unknown(j, {"kind", "ridge_lambda", "retrain_every", "ewaf_windows", "ewaf_eta", "expert_ridge", "inner",
                     "pretrain_size"},
                 "scenario.learner");
  LearnerPolicy p;
  const std::string s = "scenario.learner";
  if (j.contains("kind")) p.kind = learner_kind_from_string(get<std::string>(j, "kind", s));
  if (j.contains("ridge_lambda")) p.ridge_lambda = get<double>(j, "ridge_lambda", s);
  if (j.contains("retrain_every")) p.retrain_every = get<int>(j, "retrain_every", s);
  if (j.contains("ewaf_windows")) p.ewaf_windows = get<std::vector<int>>(j, "ewaf_windows", s);
  if (j.contains("ewaf_eta")) p.ewaf_eta = get<double>(j, "ewaf_eta", s);
  if (j.contains("expert_ridge")) p.expert_ridge = get<double>(j, "expert_ridge", s);
  if (j.contains("inner")) p.inner = learner_kind_from_string(get<std::string>(j, "inner", s));
  if (j.contains("pretrain_size")) p.pretrain_size = get<int>(j, "pretrain_size", s);
  return p;
}

TreatmentPhase parse_phase(const json& j) {
  reject_unknown(j, {"start", "kind", "gamma1", "gamma2"}, "scenario.schedule");
  TreatmentPhase ph;
  if (j.contains("start")) ph.start = get<long>(j, "start", "scenario.schedule");
  const std::string kind = j.contains("kind") ? get<std::string>(j, "kind", "scenario.schedule") : "single";
  if (kind == "single") {
    ph.model.kind = TreatmentModel::Kind::SingleLogistic;
  } else if (kind == "max") {
    ph.model.kind = TreatmentModel::Kind::MaxOfTwo;
  } else {
    throw ConfigError("treatment kind must be 'single' or 'max'");
  }
  if (!j.contains("gamma1")) throw ConfigError("treatment phase needs gamma1");
  ph.model.gamma1 = coefficients(j, "gamma1");
  if (j.contains("gamma2")) ph.model.gamma2 = coefficients(j, "gamma2");
  return ph;
}

}  // namespace

ScenarioConfig parse_scenario(const json& j, long m, double K) {
  if (j.is_string()) return scenario_catalog(j.get<std::string>(), m, K);
  reject_unknown(j, {"catalog", "name", "p", "outcome_kind", "theta", "delta", "kappa", "schedule", "learner", "horizon",
                     "seed", "monitor_fraction", "max_patients"},
                 "scenario");
  const std::string s = "scenario";
  ScenarioConfig c;
  if (j.contains("catalog")) {
    c = scenario_catalog(get<std::string>(j, "catalog", s), m, K);
  } else {
    c.name = "custom";
    c.horizon = static_cast<long>(std::floor(static_cast<double>(m) * K));
  }
  if (j.contains("name")) c.name = get<std::string>(j, "name", s);
  if (j.contains("theta")) c.theta = coefficients(j, "theta");
  if (j.contains("delta")) c.delta = coefficients(j, "delta");
  c.p = j.contains("p") ? get<int>(j, "p", s) : static_cast<int>(c.theta.size()) - 3;
  if (j.contains("outcome_kind")) c.outcome_kind = shift_kind_from_string(get<std::string>(j, "outcome_kind", s));
  if (j.contains("kappa")) {
    if (j.at("kappa").is_null()) {
      c.kappa.reset();
    } else {
      c.kappa = get<long>(j, "kappa", s);
    }
  }
  if (j.contains("schedule")) {
    if (!j.at("schedule").is_array()) throw ConfigError("schedule must be an array");
    c.schedule.clear();
    for (const auto& ph : j.at("schedule")) c.schedule.push_back(parse_phase(ph));
  }
  if (j.contains("learner")) c.learner = parse_learner(j.at("learner"));
  if (j.contains("horizon")) c.horizon = get<long>(j, "horizon", s);
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", s);
  if (j.contains("monitor_fraction")) c.monitor_fraction = get<double>(j, "monitor_fraction", s);
  if (j.contains("max_patients")) c.max_patients = get<long>(j, "max_patients", s);
  validate(c);
  return c;
}

void apply_monitor_fields(const json& j, MonitorConfig& cfg) {
  reject_unknown(j, {"m", "K", "alpha", "B", "batch_size", "kind", "norm", "conditioning", "theta_mode", "known_theta",
                     "delta_index", "seed"},
                 "monitor");
  const std::string s = "monitor";
  if (j.contains("m")) cfg.m = get<long>(j, "m", s);
  if (j.contains("K")) cfg.K = get<double>(j, "K", s);
  if (j.contains("alpha")) cfg.alpha = get<double>(j, "alpha", s);
  if (j.contains("B")) cfg.B = get<int>(j, "B", s);
  if (j.contains("batch_size")) cfg.batch_size = get<int>(j, "batch_size", s);
  if (j.contains("kind")) cfg.kind = shift_kind_from_string(get<std::string>(j, "kind", s));
  if (j.contains("norm")) cfg.norm = norm_from_string(get<std::string>(j, "norm", s));
  if (j.contains("conditioning")) cfg.conditioning = conditioning_from_string(get<std::string>(j, "conditioning", s));
  if (j.contains("theta_mode")) cfg.theta_mode = theta_mode_from_string(get<std::string>(j, "theta_mode", s));
  if (j.contains("known_theta")) cfg.known_theta = coefficients(j, "known_theta");
  if (j.contains("delta_index")) {
    const auto idx = get<std::vector<long>>(j, "delta_index", s);
    cfg.delta_index.assign(idx.begin(), idx.end());
  }
  if (j.contains("seed")) cfg.seed = get<std::uint64_t>(j, "seed", s);
}

RunConfig parse_run_config(const json& doc) {
  reject_unknown(doc, {"scenario", "monitor", "experiment"}, "top level");
  RunConfig rc;
  if (doc.contains("monitor")) apply_monitor_fields(doc.at("monitor"), rc.monitor);
  if (doc.contains("experiment")) {
    const json& e = doc.at("experiment");
    reject_unknown(e, {"n_replicates", "seed", "out", "jobs", "suite"}, "experiment");
    const std::string s = "experiment";
    if (e.contains("n_replicates")) rc.experiment.n_replicates = get<int>(e, "n_replicates", s);
    if (e.contains("seed")) rc.experiment.seed = get<std::uint64_t>(e, "seed", s);
    if (e.contains("out")) rc.experiment.out_dir = get<std::string>(e, "out", s);
    if (e.contains("jobs")) rc.experiment.jobs = get<int>(e, "jobs", s);
    if (e.contains("suite")) rc.experiment.suite = get<std::string>(e, "suite", s);
  }
  if (doc.contains("scenario")) {
    const json& sc = doc.at("scenario");
    if (sc.is_string()) rc.scenario_name = sc.get<std::string>();
    if (sc.is_object() && sc.contains("catalog") && !sc.contains("name")) {
      rc.scenario_name = sc.at("catalog").get<std::string>();
    }
    rc.scenario = parse_scenario(sc, rc.monitor.m, rc.monitor.K);
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

json scenario_to_json(const ScenarioConfig& c) {
  json sched = json::array();
  for (const auto& ph : c.schedule) {
    json p{{"start", ph.start},
           {"kind", ph.model.kind == TreatmentModel::Kind::MaxOfTwo ? "max" : "single"},
           {"gamma1", format_coefficients(ph.model.gamma1)}};
    if (ph.model.kind == TreatmentModel::Kind::MaxOfTwo) p["gamma2"] = format_coefficients(ph.model.gamma2);
    sched.push_back(p);
  }
  return json{{"name", c.name},
              {"p", c.p},
              {"outcome_kind", to_string(c.outcome_kind)},
              {"theta", format_coefficients(c.theta)},
              {"delta", format_coefficients(c.delta)},
              {"kappa", c.kappa ? json(*c.kappa) : json(nullptr)},
              {"schedule", sched},
              {"learner",
               {{"kind", to_string(c.learner.kind)},
                {"ridge_lambda", c.learner.ridge_lambda},
                {"retrain_every", c.learner.retrain_every},
                {"ewaf_windows", c.learner.ewaf_windows},
                {"ewaf_eta", c.learner.ewaf_eta},
                {"expert_ridge", c.learner.expert_ridge},
                {"inner", to_string(c.learner.inner)},
                {"pretrain_size", c.learner.pretrain_size}}},
              {"horizon", c.horizon},
              {"seed", c.seed},
              {"monitor_fraction", c.monitor_fraction},
              {"max_patients", c.max_patients}};
}

}  // namespace scusum
