#pragma once

#include "scorecusum/experiments.hpp"
#include "scorecusum/monitor.hpp"
#include "scorecusum/simgen.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace scusum {

/// Patient records as CSV: t,soc_index,prediction,x_tilde,a,y,x_1..x_p[,u].
void write_records_csv(std::ostream& os, const std::vector<PatientRecord>& records, int p, bool emit_confounder);
/// Reads the format above. Throws ParseError naming the offending line.
std::vector<PatientRecord> read_records_csv(std::istream& is);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);
/// One row per replicate and monitor.
void write_replicates_csv(std::ostream& os, const std::vector<ExperimentReport>& reports);

nlohmann::json to_json(const ExperimentMetrics& m);
nlohmann::json to_json(const ExperimentReport& r);
nlohmann::json to_json(const MonitorResult& r, const MonitorConfig& cfg);

// Enum spellings shared by the CLI and config files.
ShiftKind shift_kind_from_string(const std::string& s);
Norm norm_from_string(const std::string& s);
Conditioning conditioning_from_string(const std::string& s);
ThetaMode theta_mode_from_string(const std::string& s);
const char* to_string(ThetaMode mode);

}  // namespace scusum
