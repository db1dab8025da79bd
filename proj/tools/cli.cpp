#include "cli.hpp"

#include "scorecusum/config.hpp"
#include "scorecusum/errors.hpp"
#include "scorecusum/io.hpp"
#include "scorecusum/suites.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace scusum {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string scenario;
  std::string config;
  std::optional<double> alpha;
  std::optional<long> m;
  std::optional<double> K;
  std::optional<int> B;
  std::optional<int> batch_size;
  std::optional<std::string> norm;
  std::optional<std::string> theta_mode;
  std::optional<std::string> conditioning;
  std::optional<std::string> kind;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::string> out;
  bool emit_confounder = false;
  std::optional<int> jobs;
  std::string stream;  // monitor: read this CSV instead of simulating
  std::string suite;   // experiment
  bool traces = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  auto* sc = cmd->add_option("--scenario", f.scenario, "Catalog scenario name");
  auto* cf = cmd->add_option("--config", f.config, "JSON run configuration");
  sc->excludes(cf);
  cmd->add_option("--alpha", f.alpha, "Total false alarm rate");
  cmd->add_option("--m", f.m, "Non-contamination window length");
  cmd->add_option("--K", f.K, "Horizon multiplier: monitor up to floor(m K)");
  cmd->add_option("--B", f.B, "Bootstrap sequences");
  cmd->add_option("--batch-size", f.batch_size, "Observations per chart evaluation");
  cmd->add_option("--norm", f.norm, "Chart norm")->check(CLI::IsMember({"l1", "l2"}));
  cmd->add_option("--theta-mode", f.theta_mode, "Nuisance parameter handling")
      ->check(CLI::IsMember({"known", "plugin"}));
  cmd->add_option("--conditioning", f.conditioning, "Monitoring predictor")
      ->check(CLI::IsMember({"pred", "pred+xt"}));
  cmd->add_option("--kind", f.kind, "Shift family of the monitoring model")->check(CLI::IsMember({"logit", "risk"}));
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--replicates", f.replicates, "Replicates per scenario");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--emit-confounder", f.emit_confounder, "Write the unmeasured confounder u to stream CSVs");
  cmd->add_option("--jobs", f.jobs, "Replicate worker threads")->check(CLI::PositiveNumber);
}

/// Merges the config file (if any) with command-line overrides.
RunConfig resolve(const Flags& f, bool need_scenario, bool match_monitor_to_scenario) {
  RunConfig rc;
  json doc = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot open config file '" + f.config + "'");
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  // Flags that shape the catalog entry must land before the scenario is resolved.
  json& mon = doc["monitor"];
  if (mon.is_null()) mon = json::object();
  if (f.m) mon["m"] = *f.m;
  if (f.K) mon["K"] = *f.K;
  if (!f.scenario.empty()) doc["scenario"] = f.scenario;
  const bool scenario_given = doc.contains("scenario");
  if (match_monitor_to_scenario && doc.contains("scenario") && doc["scenario"].is_string()) {
    const MonitorConfig matched = monitor_for_scenario(doc["scenario"].get<std::string>(), MonitorConfig{});
    if (!mon.contains("kind")) mon["kind"] = to_string(matched.kind);
    if (!mon.contains("conditioning")) mon["conditioning"] = to_string(matched.conditioning);
  }
  if (f.alpha) mon["alpha"] = *f.alpha;
  if (f.B) mon["B"] = *f.B;
  if (f.batch_size) mon["batch_size"] = *f.batch_size;
  if (f.norm) mon["norm"] = *f.norm;
  if (f.theta_mode) mon["theta_mode"] = *f.theta_mode;
  if (f.conditioning) mon["conditioning"] = *f.conditioning;
  if (f.kind) mon["kind"] = *f.kind;
  json& exp = doc["experiment"];
  if (exp.is_null()) exp = json::object();
  if (f.seed) exp["seed"] = *f.seed;
  if (f.replicates) exp["n_replicates"] = *f.replicates;
  if (f.out) exp["out"] = *f.out;
  if (f.jobs) exp["jobs"] = *f.jobs;
  if (!f.suite.empty()) exp["suite"] = f.suite;
  if (!scenario_given) doc.erase("scenario");

  rc = parse_run_config(doc);
  if (rc.scenario) {
    const bool seed_in_scenario = doc["scenario"].is_object() && doc["scenario"].contains("seed");
    if (!seed_in_scenario) rc.scenario->seed = rc.experiment.seed;
  }
  if (need_scenario && !rc.scenario) throw ConfigError("a scenario is required (--scenario NAME or --config FILE)");
  validate(rc.monitor);
  return rc;
}

fs::path ensure_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  return os;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  RunConfig rc = resolve(f, true, false);
  const SimulationResult sim = simulate(*rc.scenario);
  const fs::path dir = ensure_dir(rc.experiment.out_dir);
  auto os = open_out(dir / "stream.csv");
  write_records_csv(os, sim.records, rc.scenario->p, f.emit_confounder);
  auto js = open_out(dir / "scenario.json");
  json meta = scenario_to_json(*rc.scenario);
  meta["kappa_abs"] = sim.kappa_abs ? json(*sim.kappa_abs) : json(nullptr);
  meta["patients"] = sim.records.size();
  js << meta.dump(2) << '\n';
  out << "wrote " << sim.records.size() << " records to " << (dir / "stream.csv").string() << '\n';
  return kExitOk;
}

int cmd_monitor(const Flags& f, std::ostream& out) {
  RunConfig rc = resolve(f, f.stream.empty(), true);
  MonitorConfig cfg = rc.monitor;
  if (cfg.seed == 0) cfg.seed = bootstrap_seed(rc.experiment.seed);
  std::vector<PatientRecord> records;
  std::optional<long> kappa_soc;
  std::optional<long> kappa_abs;
  if (!f.stream.empty()) {
    std::ifstream in(f.stream);
    if (!in) throw ConfigError("cannot open stream file '" + f.stream + "'");
    records = read_records_csv(in);
  } else {
    const SimulationResult sim = simulate(*rc.scenario);
    records = sim.records;
    kappa_soc = rc.scenario->kappa;
    kappa_abs = sim.kappa_abs;
  }
  if (cfg.theta_mode == ThetaMode::Known && cfg.known_theta.size() == 0) {
    if (!rc.scenario) throw ConfigError("known theta mode needs monitor.known_theta or a scenario to project from");
    cfg.known_theta = project_known_theta(*rc.scenario, cfg.conditioning);
  }
  const SocStream stream = soc_filter(records, cfg.conditioning);
  const MonitorResult res = run_monitor(cfg, stream);

  const fs::path dir = ensure_dir(rc.experiment.out_dir);
  auto ts = open_out(dir / "trace.csv");
  write_trace_csv(ts, res.trace);
  json result = to_json(res, cfg);
  result["kappa"] = kappa_soc ? json(*kappa_soc) : json(nullptr);
  result["kappa_abs"] = kappa_abs ? json(*kappa_abs) : json(nullptr);
  auto rs = open_out(dir / "result.json");
  rs << result.dump(2) << '\n';
  out << result.dump() << '\n';
  return kExitOk;
}

int cmd_experiment(const Flags& f, std::ostream& out) {
  RunConfig rc = resolve(f, f.suite.empty(), f.suite.empty());
  const auto& ex = rc.experiment;
  if (ex.n_replicates < 0) throw ConfigError("replicates must be nonnegative");
  std::vector<ExperimentReport> reports;
  if (!ex.suite.empty()) {
    SuiteOptions opts;
    opts.m = rc.monitor.m;
    opts.K = rc.monitor.K;
    opts.monitor = rc.monitor;
    opts.n_replicates = ex.n_replicates;
    opts.seed = ex.seed;
    opts.jobs = ex.jobs;
    opts.keep_traces = f.traces;
    reports = run_suite(ex.suite, opts);
  } else {
    ExperimentSpec spec;
    spec.scenario = *rc.scenario;
    spec.monitor = rc.monitor;
    spec.n_replicates = ex.n_replicates;
    spec.seed = ex.seed;
    spec.jobs = ex.jobs;
    spec.keep_traces = f.traces;
    reports.push_back(run_experiment(spec));
  }

  const fs::path dir = ensure_dir(ex.out_dir);
  auto cs = open_out(dir / "replicates.csv");
  write_replicates_csv(cs, reports);
  json summary{{"suite", ex.suite.empty() ? json(nullptr) : json(ex.suite)},
               {"seed", ex.seed},
               {"n_replicates", ex.n_replicates},
               {"m", rc.monitor.m},
               {"K", rc.monitor.K},
               {"alpha", rc.monitor.alpha},
               {"B", rc.monitor.B},
               {"reports", json::array()}};
  for (const auto& r : reports) summary["reports"].push_back(to_json(r));
  auto js = open_out(dir / "summary.json");
  js << summary.dump(2) << '\n';
  if (f.traces) {
    const fs::path tdir = ensure_dir((dir / "traces").string());
    for (const auto& r : reports) {
      for (const auto& rep : r.replicates) {
        auto os = open_out(tdir / (r.scenario + "_" + r.label + "_" + std::to_string(rep.replicate) + ".csv"));
        write_trace_csv(os, rep.trace);
      }
    }
  }
  for (const auto& r : reports) {
    out << r.scenario << " [" << r.label << "] valid=" << r.metrics.n_valid
        << " false_alarm=" << r.metrics.false_alarm_rate << " alarm=" << r.metrics.alarm_rate;
    if (r.metrics.power) out << " power=" << *r.metrics.power;
    if (r.metrics.delay_q50) out << " median_delay=" << *r.metrics.delay_q50;
    out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-based CUSUM monitoring of clinical risk models under confounding interventions", "scorecusum"};
  app.require_subcommand(1);
  Flags sim_f;
  Flags mon_f;
  Flags exp_f;
  auto* sim = app.add_subcommand("simulate", "Generate a patient stream and write it as CSV");
  add_common(sim, sim_f);
  auto* mon = app.add_subcommand("monitor", "Run the monitor on one stream and write its trace");
  add_common(mon, mon_f);
  mon->add_option("--stream", mon_f.stream, "Patient CSV to monitor instead of simulating");
  auto* exp = app.add_subcommand("experiment", "Run replicated experiments and write summaries");
  add_common(exp, exp_f);
  exp->add_option("--suite", exp_f.suite, "Experiment suite")
      ->check(CLI::IsMember({"false-alarm", "shift-power", "trust"}));
  exp->add_flag("--traces", exp_f.traces, "Also write per-replicate chart traces");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_f, out);
    if (*mon) return cmd_monitor(mon_f, out);
    return cmd_experiment(exp_f, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace scusum
