#pragma once

#include "scorecusum/monitor.hpp"
#include "scorecusum/simgen.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace scusum {

struct ExperimentSettings {
  int n_replicates = 200;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int jobs = 1;
  std::string suite;  // false-alarm, shift-power or trust; empty runs the scenario alone
};

/// Parsed run configuration. The scenario is resolved after the monitor
/// section because catalog entries depend on m and K.
struct RunConfig {
  std::optional<ScenarioConfig> scenario;
  std::string scenario_name;  // catalog name when the scenario came from the catalog
  MonitorConfig monitor;
  ExperimentSettings experiment;
};

/// Parses {"scenario": ..., "monitor": {...}, "experiment": {...}}. The
/// scenario is a catalog name or an object of ScenarioConfig fields,
/// optionally starting from {"catalog": name}. Unknown keys throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

ScenarioConfig parse_scenario(const nlohmann::json& j, long m, double K);
void apply_monitor_fields(const nlohmann::json& j, MonitorConfig& cfg);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

}  // namespace scusum
