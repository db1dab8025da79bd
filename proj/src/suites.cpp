#include "scorecusum/suites.hpp"

#include "scorecusum/errors.hpp"

namespace scusum {

std::vector<std::string> suite_names() { return {"false-alarm", "shift-power", "trust"}; }

MonitorConfig monitor_for_scenario(const std::string& scenario, MonitorConfig base) {
  base.kind = scenario.rfind("tc_", 0) == 0 ? ShiftKind::RiskShift : ShiftKind::LogitShift;
  const bool xtilde = scenario.find("_xtilde") != std::string::npos;
  base.conditioning = xtilde ? Conditioning::PredictionPlusCovariates : Conditioning::PredictionOnly;
  return base;
}

namespace {

ExperimentReport run_one(ScenarioConfig sc, const std::string& label, const SuiteOptions& opts) {
  MonitorConfig mc = monitor_for_scenario(sc.name, opts.monitor);
  mc.m = opts.m;
  mc.K = opts.K;
  auto reports = run_paired(sc, std::span<const MonitorConfig>(&mc, 1), std::span<const std::string>(&label, 1),
                            opts.n_replicates, opts.seed, opts.jobs, opts.keep_traces);
  return std::move(reports.front());
}

}  // namespace

std::vector<ExperimentReport> run_suite(const std::string& name, const SuiteOptions& opts) {
  std::vector<ExperimentReport> out;
  if (name == "false-alarm") {
    for (const char* sc : {"ce_pred", "ce_pred_xtilde", "tc_pred", "tc_pred_xtilde"}) {
      out.push_back(run_one(scenario_catalog(sc, opts.m, opts.K), "locked", opts));
    }
  } else if (name == "shift-power") {
    for (const char* sc : {"big_shift", "small_shift"}) {
      ScenarioConfig locked = scenario_catalog(sc, opts.m, opts.K);
      ScenarioConfig ewaf = locked;
      ewaf.learner.kind = LearnerKind::Ewaf;
      out.push_back(run_one(locked, "locked", opts));
      out.push_back(run_one(ewaf, "ewaf", opts));
    }
  } else if (name == "trust") {
    for (const char* shift : {"highrisk_shift", "symmetric_shift"}) {
      for (const char* trust : {"trust_none", "trust_calibrated", "trust_over"}) {
        out.push_back(run_one(scenario_catalog(std::string(shift) + "+" + trust, opts.m, opts.K), "locked", opts));
      }
    }
  } else {
    throw ConfigError("unknown suite '" + name + "' (expected false-alarm, shift-power or trust)");
  }
  return out;
}

}  // namespace scusum
