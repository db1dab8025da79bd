#pragma once

#include "scorecusum/experiments.hpp"

#include <string>
#include <vector>

namespace scusum {

struct SuiteOptions {
  long m = 100;
  double K = 4.0;
  MonitorConfig monitor;  // alpha, B, batch size, norm and theta mode are taken from here
  int n_replicates = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool keep_traces = false;
};

std::vector<std::string> suite_names();

/// Monitoring model matched to a catalog scenario: risk shift for the
/// time-constant selection rows, logit shift otherwise; x_tilde joins the
/// predictor for the *_xtilde rows.
MonitorConfig monitor_for_scenario(const std::string& scenario, MonitorConfig base);

/// Runs a named suite:
///   false-alarm  ce_pred, ce_pred_xtilde, tc_pred, tc_pred_xtilde
///   shift-power  big_shift and small_shift, locked and EWAF-retrained
///   trust        highrisk_shift and symmetric_shift under three trust levels
/// Every scenario in a suite uses the same replicate seeds.
std::vector<ExperimentReport> run_suite(const std::string& name, const SuiteOptions& opts);

}  // namespace scusum
