#include "scorecusum/chart.hpp"
#include "scorecusum/config.hpp"
#include "scorecusum/errors.hpp"
#include "scorecusum/experiments.hpp"
#include "scorecusum/io.hpp"
#include "scorecusum/models.hpp"
#include "scorecusum/simgen.hpp"
#include "scorecusum/suites.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using nlohmann::json;
using namespace scusum;

namespace {

ShiftKind kind_of(const std::string& s) { return shift_kind_from_string(s); }

// Config documents follow the CLI's JSON layout. The scenario inherits the
// experiment seed unless it sets one, and a catalog scenario picks its
// matching monitoring model unless the monitor section names one.
RunConfig resolve(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (doc.contains("scenario") && doc["scenario"].is_string()) {
    json& mon = doc["monitor"];
    if (mon.is_null()) mon = json::object();
    const MonitorConfig matched = monitor_for_scenario(doc["scenario"].get<std::string>(), MonitorConfig{});
    if (!mon.contains("kind")) mon["kind"] = to_string(matched.kind);
    if (!mon.contains("conditioning")) mon["conditioning"] = to_string(matched.conditioning);
  }
  RunConfig rc = parse_run_config(doc);
  if (rc.scenario && !(doc["scenario"].is_object() && doc["scenario"].contains("seed"))) {
    rc.scenario->seed = rc.experiment.seed;
  }
  validate(rc.monitor);
  return rc;
}

const ScenarioConfig& need_scenario(const RunConfig& rc) {
  if (!rc.scenario) throw ConfigError("config has no scenario");
  return *rc.scenario;
}

py::dict records_to_columns(const std::vector<PatientRecord>& recs, int p) {
  const auto n = static_cast<Index>(recs.size());
  Eigen::VectorXd prediction(n), x_tilde(n), u(n);
  Eigen::VectorXi t(n), soc(n), a(n), y(n);
  Mat x(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& r = recs[static_cast<std::size_t>(i)];
    t[i] = static_cast<int>(r.t);
    soc[i] = static_cast<int>(r.soc_index);
    prediction[i] = r.prediction;
    x_tilde[i] = r.x_tilde;
    u[i] = r.u;
    a[i] = r.a;
    y[i] = r.y;
    x.row(i) = r.x.transpose();
  }
  py::dict d;
  d["t"] = t;
  d["soc_index"] = soc;
  d["prediction"] = prediction;
  d["x_tilde"] = x_tilde;
  d["a"] = a;
  d["y"] = y;
  d["x"] = x;
  d["u"] = u;
  return d;
}

std::string run_monitor_json(const std::string& text) {
  const RunConfig rc = resolve(text);
  MonitorConfig cfg = rc.monitor;
  if (cfg.seed == 0) cfg.seed = bootstrap_seed(rc.experiment.seed);
  const ScenarioConfig& sc = need_scenario(rc);
  if (cfg.theta_mode == ThetaMode::Known && cfg.known_theta.size() == 0) {
    cfg.known_theta = project_known_theta(sc, cfg.conditioning);
  }
  const SimulationResult sim = simulate(sc);
  const MonitorResult res = run_monitor(cfg, soc_filter(sim.records, cfg.conditioning));
  json out = to_json(res, cfg);
  out["kappa"] = sc.kappa ? json(*sc.kappa) : json(nullptr);
  out["kappa_abs"] = sim.kappa_abs ? json(*sim.kappa_abs) : json(nullptr);
  json trace = json::array();
  for (const auto& row : res.trace) {
    trace.push_back({{"t", row.t},
                     {"t_abs", row.t_abs},
                     {"chart", row.chart},
                     {"h", row.h},
                     {"limit_active", row.limit_active},
                     {"survivors", row.survivors}});
  }
  out["trace"] = trace;
  return out.dump();
}

std::string run_experiment_json(const std::string& text) {
  const RunConfig rc = resolve(text);
  const auto& ex = rc.experiment;
  std::vector<ExperimentReport> reports;
  if (!ex.suite.empty()) {
    SuiteOptions opts;
    opts.m = rc.monitor.m;
    opts.K = rc.monitor.K;
    opts.monitor = rc.monitor;
    opts.n_replicates = ex.n_replicates;
    opts.seed = ex.seed;
    opts.jobs = ex.jobs;
    reports = run_suite(ex.suite, opts);
  } else {
    ExperimentSpec spec;
    spec.scenario = need_scenario(rc);
    spec.monitor = rc.monitor;
    spec.n_replicates = ex.n_replicates;
    spec.seed = ex.seed;
    spec.jobs = ex.jobs;
    reports.push_back(run_experiment(spec));
  }
  json out{{"suite", ex.suite.empty() ? json(nullptr) : json(ex.suite)}, {"reports", json::array()}};
  for (const auto& r : reports) {
    json jr = to_json(r);
    json alarms = json::array();
    for (const auto& rep : r.replicates) alarms.push_back(rep.alarm_soc ? json(*rep.alarm_soc) : json(nullptr));
    jr["alarm_times"] = alarms;
    out["reports"].push_back(jr);
  }
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Score-based CUSUM monitoring with bootstrap dynamic control limits";

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("sigmoid", &sigmoid, py::arg("x"));
  m.def("score_theta", &score_theta, py::arg("theta"), py::arg("z"), py::arg("y"));
  m.def(
      "score_delta",
      [](const Vec& theta, const Vec& z, int y, const std::string& kind) {
        return score_delta(theta, z, y, kind_of(kind));
      },
      py::arg("theta"), py::arg("z"), py::arg("y"), py::arg("kind") = "logit");
  m.def("info_theta", &info_theta, py::arg("theta"), py::arg("z"));
  m.def(
      "cross_info",
      [](const Vec& theta, const Vec& z, const std::string& kind) { return cross_info(theta, z, kind_of(kind)); },
      py::arg("theta"), py::arg("z"), py::arg("kind") = "logit");
  m.def(
      "cusum_stat",
      [](const Mat& scores, const std::string& norm) {
        ScorePrefix p;
        for (Index i = 0; i < scores.rows(); ++i) p.append(scores.row(i).transpose());
        return cusum_stat(p, norm_from_string(norm));
      },
      py::arg("scores"), py::arg("norm") = "l1", "Chart statistic of the rows of `scores`, one score per row.");

  m.def("catalog_names", &catalog_names);
  m.def(
      "scenario_catalog", [](const std::string& name, long m_, double K) {
        return scenario_to_json(scenario_catalog(name, m_, K)).dump();
      },
      py::arg("name"), py::arg("m") = 100, py::arg("K") = 4.0);
  m.def(
      "simulate",
      [](const std::string& text) {
        const RunConfig rc = resolve(text);
        const ScenarioConfig& sc = need_scenario(rc);
        SimulationResult sim;
        {
          py::gil_scoped_release release;
          sim = simulate(sc);
        }
        return records_to_columns(sim.records, sc.p);
      },
      py::arg("config_json"));
  m.def(
      "monitor",
      [](const std::string& text) {
        py::gil_scoped_release release;
        return run_monitor_json(text);
      },
      py::arg("config_json"));
  m.def(
      "experiment",
      [](const std::string& text) {
        py::gil_scoped_release release;
        return run_experiment_json(text);
      },
      py::arg("config_json"));
}
