#include "scorecusum/config.hpp"
#include "scorecusum/errors.hpp"
#include "scorecusum/io.hpp"
#include "scorecusum/simgen.hpp"

#include <doctest.h>

#include "../../tools/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace scusum;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scorecusum_unit_" + name);
  fs::remove_all(p);
  return p;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("patient CSV round-trip") {
  ScenarioConfig sc = scenario_catalog("tc_pred", 20, 4.0);
  sc.seed = 2;
  const auto recs = simulate(sc).records;
  std::stringstream ss;
  write_records_csv(ss, recs, sc.p, true);
  const std::string header = ss.str().substr(0, ss.str().find('\n'));
  CHECK(header == "t,soc_index,prediction,x_tilde,a,y,x_1,x_2,x_3,x_4,x_5,x_6,x_7,x_8,u");
  const auto back = read_records_csv(ss);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].t == recs[i].t);
    CHECK(back[i].prediction == recs[i].prediction);
    CHECK(back[i].x == recs[i].x);
    CHECK(back[i].u == recs[i].u);
    CHECK(back[i].a == recs[i].a);
    CHECK(back[i].y == recs[i].y);
  }
  const auto s1 = soc_filter(recs, Conditioning::PredictionPlusCovariates);
  const auto s2 = soc_filter(back, Conditioning::PredictionPlusCovariates);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].obs.z == s2[i].obs.z);
}

TEST_CASE("malformed CSV names the offending line") {
  std::stringstream ss("t,soc_index,prediction,x_tilde,a,y,x_1\n1,1,0.5,0.1,0,1,0.2\n2,2,0.5,0.1,3,1,0.2\n");
  try {
    read_records_csv(ss);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::stringstream short_row("t,soc_index,prediction,x_tilde,a,y,x_1\n1,1,0.5\n");
  CHECK_THROWS_AS(read_records_csv(short_row), ParseError);
  std::stringstream bad_header("time,y\n");
  CHECK_THROWS_AS(read_records_csv(bad_header), ParseError);
}

TEST_CASE("config parsing rejects unknown keys") {
  const auto parse = [](const char* text) { return parse_run_config(json::parse(text)); };
  CHECK_NOTHROW(parse("{\"scenario\": \"ce_pred\", \"monitor\": {\"m\": 50}}"));
  CHECK_THROWS_AS(parse("{\"scenario\": \"ce_pred\", \"extra\": 1}"), ConfigError);
  CHECK_THROWS_AS(parse("{\"monitor\": {\"mm\": 1}}"), ConfigError);
  CHECK_THROWS_AS(parse("{\"experiment\": {\"seeds\": 1}}"), ConfigError);
  CHECK_THROWS_AS(parse("{\"scenario\": {\"catalog\": \"ce_pred\", \"thetaa\": \"(1)\"}}"), ConfigError);
  CHECK_THROWS_AS(parse("{\"scenario\": \"not_a_scenario\"}"), ConfigError);
}

TEST_CASE("inline scenarios override catalog fields") {
  const RunConfig rc = parse_run_config(json::parse(
      R"({"scenario":{"catalog":"big_shift","kappa":null,"horizon":80},"monitor":{"m":20,"K":4}})"));
  REQUIRE(rc.scenario);
  CHECK_FALSE(rc.scenario->kappa.has_value());
  CHECK(rc.scenario->horizon == 80);
  CHECK(rc.scenario->delta == parse_coefficients("(-1.6,-0.8,-0.8,-0.8,0_4,0,0,0)"));
  const ScenarioConfig again = parse_scenario(scenario_to_json(*rc.scenario), 20, 4.0);
  CHECK(again.theta == rc.scenario->theta);
  CHECK(again.delta == rc.scenario->delta);
  CHECK(again.horizon == rc.scenario->horizon);

  ScenarioConfig ew = scenario_catalog("small_shift", 20, 4.0);
  ew.learner.kind = LearnerKind::Ewaf;
  ew.learner.ewaf_eta = 0.25;
  ew.learner.ewaf_windows = {10, 0};
  const ScenarioConfig back = parse_scenario(scenario_to_json(ew), 20, 4.0);
  CHECK(back.learner.kind == LearnerKind::Ewaf);
  CHECK(back.learner.ewaf_eta == 0.25);
  CHECK(back.learner.ewaf_windows == std::vector<int>{10, 0});
  CHECK(back.schedule.size() == ew.schedule.size());
  CHECK(back.monitor_fraction == ew.monitor_fraction);
}

TEST_CASE("cli exit codes") {
  CHECK(cli({"simulate", "--scenario", "nope", "--out", scratch("bad").string()}) == kExitConfig);
  CHECK(cli({"simulate", "--bogus-flag"}) == kExitConfig);
  CHECK(cli({"monitor", "--scenario", "ce_pred", "--norm", "l3"}) == kExitConfig);
  CHECK(cli({"--help"}) == kExitOk);
  CHECK(cli({"monitor", "--stream", "/nonexistent/stream.csv", "--m", "20"}) == kExitConfig);

  const fs::path dir = scratch("rt");
  fs::create_directories(dir);
  std::ofstream(dir / "short.csv") << "t,soc_index,prediction,x_tilde,a,y,x_1\n1,1,0.5,0.1,0,1,0.2\n";
  CHECK(cli({"monitor", "--stream", (dir / "short.csv").string(), "--m", "20", "--out", dir.string()}) ==
        kExitRuntime);
}

TEST_CASE("simulate writes deterministic streams and creates the output directory") {
  const fs::path a = scratch("sim_a") / "nested";
  const fs::path b = scratch("sim_b");
  CHECK(cli({"simulate", "--scenario", "ce_pred", "--m", "20", "--seed", "4", "--out", a.string()}) == kExitOk);
  CHECK(cli({"simulate", "--scenario", "ce_pred", "--m", "20", "--seed", "4", "--out", b.string()}) == kExitOk);
  CHECK(slurp(a / "stream.csv") == slurp(b / "stream.csv"));
  CHECK(fs::exists(a / "scenario.json"));
  CHECK(slurp(a / "stream.csv").find(",u\n") == std::string::npos);
}

TEST_CASE("zero horizon writes a header-only stream") {
  const fs::path dir = scratch("zero");
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"scenario":{"catalog":"ce_pred","horizon":0}})";
  CHECK(cli({"simulate", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == kExitOk);
  const std::string text = slurp(dir / "stream.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

TEST_CASE("monitor on a simulated and on a written stream agree") {
  const fs::path dir = scratch("mon");
  const std::vector<std::string> common = {"--scenario", "big_shift", "--m", "40", "--B", "100", "--seed", "3"};
  auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
    head.insert(head.end(), common.begin(), common.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };
  REQUIRE(cli(with({"simulate"}, {"--out", (dir / "s").string()})) == kExitOk);
  std::string out1, out2;
  REQUIRE(cli(with({"monitor"}, {"--out", (dir / "m1").string()}), &out1) == kExitOk);
  REQUIRE(cli({"monitor", "--stream", (dir / "s" / "stream.csv").string(), "--m", "40", "--B", "100", "--seed", "3",
               "--kind", "logit", "--out", (dir / "m2").string()},
              &out2) == kExitOk);
  const json j1 = json::parse(out1);
  const json j2 = json::parse(out2);
  for (const char* key : {"alarm", "horizon", "m", "K", "alpha", "B", "kind", "norm", "theta_hat", "diagnostics"}) {
    CHECK(j1.contains(key));
  }
  CHECK(j1["alarm"] == j2["alarm"]);
  CHECK(slurp(dir / "m1" / "trace.csv") == slurp(dir / "m2" / "trace.csv"));
  CHECK(slurp(dir / "m1" / "trace.csv").rfind("t,t_abs,chart,h,limit_active,survivors,theta_norm\n", 0) == 0);
}

TEST_CASE("experiment suites produce the metric keys and ignore the thread count") {
  for (const char* suite : {"false-alarm", "shift-power", "trust"}) {
    const fs::path d1 = scratch(std::string("suite1_") + suite);
    const fs::path d4 = scratch(std::string("suite4_") + suite);
    const std::vector<std::string> base = {"experiment", "--suite", suite, "--m", "20", "--B", "60", "--replicates",
                                           "3", "--seed", "2"};
    auto args1 = base;
    args1.insert(args1.end(), {"--jobs", "1", "--out", d1.string()});
    auto args4 = base;
    args4.insert(args4.end(), {"--jobs", "4", "--out", d4.string()});
    REQUIRE(cli(args1) == kExitOk);
    REQUIRE(cli(args4) == kExitOk);
    CHECK(slurp(d1 / "summary.json") == slurp(d4 / "summary.json"));
    CHECK(slurp(d1 / "replicates.csv") == slurp(d4 / "replicates.csv"));
    const json s = json::parse(slurp(d1 / "summary.json"));
    REQUIRE(!s["reports"].empty());
    for (const auto& r : s["reports"]) {
      for (const char* key : {"n_valid", "false_alarm_rate", "alarm_rate", "power", "delay_q25", "delay_median",
                              "delay_q75", "median_alarm_time", "censored_mass", "cdf_grid", "cdf"}) {
        CHECK(r["metrics"].contains(key));
      }
    }
  }
  CHECK(cli({"experiment", "--suite", "bogus"}) == kExitConfig);
}
