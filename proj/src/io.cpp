#include "scorecusum/io.hpp"

#include "scorecusum/errors.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace scusum {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& cell, long line, const char* column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": bad value '" + cell + "' in column " + column);
  }
  return v;
}

long parse_long(const std::string& cell, long line, const char* column) {
  long v = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": bad integer '" + cell + "' in column " + column);
  }
  return v;
}

std::string opt_cell(const std::optional<long>& v) { return v ? std::to_string(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void write_records_csv(std::ostream& os, const std::vector<PatientRecord>& records, int p, bool emit_confounder) {
  os << "t,soc_index,prediction,x_tilde,a,y";
  for (int k = 1; k <= p; ++k) os << ",x_" << k;
  if (emit_confounder) os << ",u";
  os << '\n';
  os.precision(17);
  for (const auto& r : records) {
    os << r.t << ',' << r.soc_index << ',' << r.prediction << ',' << r.x_tilde << ',' << r.a << ',' << r.y;
    for (Index k = 0; k < r.x.size(); ++k) os << ',' << r.x[k];
    if (emit_confounder) os << ',' << r.u;
    os << '\n';
  }
}

std::vector<PatientRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("line 1: missing header");
  const auto header = split_csv(strip_cr(line));
  const std::vector<std::string> fixed = {"t", "soc_index", "prediction", "x_tilde", "a", "y"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw ParseError("line 1: header must start with t,soc_index,prediction,x_tilde,a,y");
  }
  const bool has_u = header.back() == "u";
  const std::size_t p = header.size() - fixed.size() - (has_u ? 1 : 0);
  for (std::size_t k = 0; k < p; ++k) {
    if (header[fixed.size() + k] != "x_" + std::to_string(k + 1)) {
      throw ParseError("line 1: expected column x_" + std::to_string(k + 1));
    }
  }

  std::vector<PatientRecord> out;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(cells.size()));
    }
    PatientRecord r;
    r.t = parse_long(cells[0], lineno, "t");
    r.soc_index = parse_long(cells[1], lineno, "soc_index");
    r.prediction = parse_double(cells[2], lineno, "prediction");
    r.x_tilde = parse_double(cells[3], lineno, "x_tilde");
    r.a = static_cast<int>(parse_long(cells[4], lineno, "a"));
    r.y = static_cast<int>(parse_long(cells[5], lineno, "y"));
    if ((r.a != 0 && r.a != 1) || (r.y != 0 && r.y != 1)) {
      throw ParseError("line " + std::to_string(lineno) + ": a and y must be 0 or 1");
    }
    if (!(r.prediction > 0.0 && r.prediction < 1.0)) {
      throw ParseError("line " + std::to_string(lineno) + ": prediction must lie in (0, 1)");
    }
    r.x.resize(static_cast<Index>(p));
    for (std::size_t k = 0; k < p; ++k) r.x[static_cast<Index>(k)] = parse_double(cells[6 + k], lineno, "x");
    if (has_u) r.u = parse_double(cells.back(), lineno, "u");
    // Untreated rows without a SOC index went to the update stream.
    r.monitor_side = !(r.a == 0 && r.soc_index == 0);
    out.push_back(std::move(r));
  }
  return out;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "t,t_abs,chart,h,limit_active,survivors,theta_norm\n";
  os.precision(17);
  for (const auto& r : trace) {
    os << r.t << ',' << r.t_abs << ',' << r.chart << ',' << r.h << ',' << (r.limit_active ? 1 : 0) << ','
       << r.survivors << ',' << r.theta_norm << '\n';
  }
}

void write_replicates_csv(std::ostream& os, const std::vector<ExperimentReport>& reports) {
  os << "scenario,replicate,seed,alarm_time_soc,alarm_time_abs,valid,monitor\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.replicates) {
      os << rep.scenario << ',' << r.replicate << ',' << r.seed << ',' << opt_cell(r.alarm_soc) << ','
         << opt_cell(r.alarm_abs) << ',' << (r.valid ? 1 : 0) << ',' << rep.label << '\n';
    }
  }
}

json to_json(const ExperimentMetrics& m) {
  return json{{"n_valid", m.n_valid},
              {"false_alarm_rate", m.n_valid > 0 ? json(m.false_alarm_rate) : json(nullptr)},
              {"alarm_rate", m.n_valid > 0 ? json(m.alarm_rate) : json(nullptr)},
              {"power", opt_json(m.power)},
              {"delay_q25", opt_json(m.delay_q25)},
              {"delay_median", opt_json(m.delay_q50)},
              {"delay_q75", opt_json(m.delay_q75)},
              {"median_alarm_time", opt_json(m.median_alarm_time)},
              {"censored_mass", m.n_valid > 0 ? json(m.censored_mass) : json(nullptr)},
              {"cdf_grid", m.cdf_grid},
              {"cdf", m.cdf}};
}

json to_json(const ExperimentReport& r) {
  json cal = json::array();
  for (const auto& b : r.calibration) {
    cal.push_back({{"lo", b.lo},
                   {"hi", b.hi},
                   {"count", b.count},
                   {"mean_predicted", b.mean_predicted},
                   {"mean_observed", b.mean_observed}});
  }
  json auc_arr = json::array();
  for (double a : r.auc_by_period) auc_arr.push_back(std::isfinite(a) ? json(a) : json(nullptr));
  return json{{"scenario", r.scenario},
              {"monitor", r.label},
              {"n_replicates", r.n_replicates},
              {"invalid_count", r.invalid_count},
              {"metrics", to_json(r.metrics)},
              {"auc_by_period", auc_arr},
              {"calibration", cal}};
}

json to_json(const MonitorResult& r, const MonitorConfig& cfg) {
  json theta = json::array();
  for (Index i = 0; i < r.final_theta_hat.size(); ++i) theta.push_back(r.final_theta_hat[i]);
  return json{{"alarm", r.alarm_time ? json(*r.alarm_time) : json(nullptr)},
              {"alarm_abs", r.alarm_time_abs ? json(*r.alarm_time_abs) : json(nullptr)},
              {"horizon", horizon(cfg)},
              {"m", cfg.m},
              {"K", cfg.K},
              {"alpha", cfg.alpha},
              {"B", cfg.B},
              {"kind", to_string(cfg.kind)},
              {"norm", to_string(cfg.norm)},
              {"conditioning", to_string(cfg.conditioning)},
              {"theta_mode", to_string(cfg.theta_mode)},
              {"theta_hat", theta},
              {"diagnostics",
               {{"adequacy_warnings", r.diagnostics.adequacy_warnings},
                {"ridge_fallbacks", r.diagnostics.ridge_fallbacks},
                {"information_jitters", r.diagnostics.information_jitters},
                {"eliminated", r.diagnostics.eliminated},
                {"resamples", r.diagnostics.resamples},
                {"refits", r.diagnostics.refits}}}};
}

ShiftKind shift_kind_from_string(const std::string& s) {
  if (s == "logit") return ShiftKind::LogitShift;
  if (s == "risk") return ShiftKind::RiskShift;
  throw ConfigError("unknown shift kind '" + s + "' (expected logit or risk)");
}

Norm norm_from_string(const std::string& s) {
  if (s == "l1") return Norm::L1;
  if (s == "l2") return Norm::L2;
  throw ConfigError("unknown norm '" + s + "' (expected l1 or l2)");
}

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "pred") return Conditioning::PredictionOnly;
  if (s == "pred+xt") return Conditioning::PredictionPlusCovariates;
  throw ConfigError("unknown conditioning '" + s + "' (expected pred or pred+xt)");
}

ThetaMode theta_mode_from_string(const std::string& s) {
  if (s == "known") return ThetaMode::Known;
  if (s == "plugin") return ThetaMode::Plugin;
  throw ConfigError("unknown theta mode '" + s + "' (expected known or plugin)");
}

const char* to_string(ThetaMode mode) { return mode == ThetaMode::Known ? "known" : "plugin"; }

}  // namespace scusum
