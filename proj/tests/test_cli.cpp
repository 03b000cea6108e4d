#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geomech/cli.hpp"
#include "geomech/parser.hpp"
#include "geomech/sampling.hpp"

using namespace geomech;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string scenario(const std::string& name) { return std::string(GEOMECH_SOURCE_DIR) + "/scenarios/" + name + ".toml"; }

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("geomech_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name), std::ios::binary) << text;
    return file(name);
  }

 private:
  fs::path path_;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<double> row(const std::string& line) {
  std::vector<double> out;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(std::stod(cell));
  return out;
}

json run_check(const std::string& name, const std::string& suite, int* code = nullptr, cli::Options o = {}) {
  std::ostringstream out, err;
  const int c = cli::cmd_check(scenario(name), suite, "-", o, out, err);
  if (code) *code = c;
  return json::parse(out.str());
}

const json* find_check(const json& report, const std::string& name) {
  for (const auto& c : report["checks"])
    if (c["name"] == name) return &c;
  return nullptr;
}

const char* kBlowup = R"(name = "blowup"
[chart]
dim = 1
[metric]
diag = ["1"]
[potential]
U = "-x1^4"
[run]
x0 = [1.0]
v0 = [1.0]
t_end = 10.0
dt = 1e-3
)";

}  // namespace

TEST(Simulate, OscillatorCsvAndSidecar) {
  TempDir d;
  const std::string csv_path = d.file("osc.csv");
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate(scenario("oscillator"), csv_path, out, err), 0) << err.str();
  const auto ls = lines(slurp(csv_path));
  ASSERT_EQ(ls.size(), 10002u);
  EXPECT_EQ(ls.front(), "t,x1,x2,v1,v2,T,theta_dot,H");
  const auto first = row(ls[1]);
  const auto last = row(ls.back());
  ASSERT_EQ(first.size(), 8u);
  EXPECT_EQ(first[0], 0.0);
  EXPECT_EQ(last[0], 10.0);
  EXPECT_NEAR(last[1], std::cos(10.0), 1e-9);
  EXPECT_NEAR(last[2], std::sin(10.0), 1e-9);
  EXPECT_NEAR(last[7], 1.0, 1e-10);

  const json side = json::parse(slurp(d.file("osc.json")));
  EXPECT_EQ(side["rows"], 10001);
  EXPECT_EQ(side["integrator"], "rk4");
  EXPECT_LT(side["drift"]["H"].get<double>(), 1e-8);
  EXPECT_EQ(side["conventions"]["codiff_sign"], 1);
}

TEST(Simulate, BitIdenticalAcrossRuns) {
  std::ostringstream a, b, err;
  ASSERT_EQ(cli::cmd_simulate(scenario("kepler"), "-", a, err), 0);
  ASSERT_EQ(cli::cmd_simulate(scenario("kepler"), "-", b, err), 0);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().find(' '), std::string::npos);
}

TEST(Simulate, MinkowskiThetaDotConstant) {
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate(scenario("minkowski_geodesic"), "-", out, err), 0);
  const auto ls = lines(out.str());
  ASSERT_GT(ls.size(), 2u);
  EXPECT_EQ(ls.front(), "t,x1,x2,x3,x4,v1,v2,v3,v4,T,theta_dot");
  const double th0 = row(ls[1]).back();
  for (std::size_t k = 1; k < ls.size(); ++k) EXPECT_NEAR(row(ls[k]).back(), th0, 1e-8 * std::abs(th0));
}

TEST(Simulate, ConfigAndNumericErrors) {
  TempDir d;
  std::ostringstream out, err;
  std::string bad = kBlowup;
  bad.replace(bad.find("-x1^4"), 5, "x1 + ");
  EXPECT_EQ(cli::cmd_simulate(d.write("bad.toml", bad), "-", out, err), cli::kConfig);
  EXPECT_NE(err.str().find("at byte"), std::string::npos) << err.str();

  err.str("");
  EXPECT_EQ(cli::cmd_simulate(d.write("blowup.toml", kBlowup), "-", out, err), cli::kNumeric);
  EXPECT_NE(err.str().find("t="), std::string::npos) << err.str();

  err.str("");
  EXPECT_EQ(cli::cmd_simulate(d.file("missing.toml"), "-", out, err), cli::kConfig);
  std::string norun = kBlowup;
  norun = norun.substr(0, norun.find("[run]"));
  EXPECT_EQ(cli::cmd_simulate(d.write("norun.toml", norun), "-", out, err), cli::kConfig);
}

TEST(Check, ReportShape) {
  int code = -1;
  const json r = run_check("rotation_field", "recover-force", &code);
  EXPECT_EQ(code, 0);
  EXPECT_EQ(r["suite"], "recover-force");
  EXPECT_EQ(r["exit"], 0);
  for (const auto& c : r["checks"]) {
    EXPECT_TRUE(c.contains("name") && c.contains("residual") && c.contains("gate") && c.contains("pass"));
  }
  const json* m = find_check(r, "matches_given_force");
  ASSERT_NE(m, nullptr);
  EXPECT_TRUE((*m)["pass"].get<bool>());
  EXPECT_LT((*m)["residual"].get<double>(), 1e-10);
  EXPECT_LT((*find_check(r, "intermediate_residual"))["residual"].get<double>(), 1e-10);
  for (const char* key : {"codiff_sign", "c", "E0", "seed"}) EXPECT_TRUE(r["conventions"].contains(key)) << key;
}

TEST(Check, WavesOnLinearPhase) {
  int code = -1;
  const json r = run_check("plane_wave", "waves", &code);
  EXPECT_EQ(code, 0);
  for (const char* name : {"schrodinger.hamilton_jacobi", "schrodinger.harmonic", "schrodinger.schrodinger"}) {
    const json* c = find_check(r, name);
    ASSERT_NE(c, nullptr) << name;
    EXPECT_TRUE((*c)["pass"].get<bool>()) << name;
  }
}

TEST(Check, EverySuiteOnItsScenario) {
  const std::vector<std::pair<const char*, const char*>> runs = {
      {"oscillator", "newton"},          {"kepler", "newton"},          {"polar_geodesic", "newton"},
      {"rotation_field", "recover-force"}, {"kepler_field", "recover-force"}, {"time_constraint", "time-constraint"},
      {"newtonian_block", "reduce"},     {"time_constraint", "reduce"}, {"cyclotron", "relativistic"},
      {"maxwell_gauge", "maxwell"},      {"maxwell_golden", "maxwell"}, {"plane_wave", "waves"},
      {"schrodinger_time", "waves"},     {"noether_central", "noether"},
  };
  for (const auto& [name, suite] : runs) {
    int code = -1;
    const json r = run_check(name, suite, &code);
    EXPECT_EQ(code, 0) << name << " " << suite << "\n" << r.dump(2);
    EXPECT_EQ(r["exit"], code);
  }
}

TEST(Check, UnknownSuiteAndMissingBlocks) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_check(scenario("oscillator"), "nonsense", "-", {}, out, err), cli::kConfig);
  EXPECT_NE(err.str().find("nonsense"), std::string::npos);
  EXPECT_EQ(cli::cmd_check(scenario("oscillator"), "maxwell", "-", {}, out, err), cli::kConfig);
}

TEST(Check, CodiffSignFlag) {
  cli::Options o;
  o.codiff_sign = -1;
  const json r = run_check("maxwell_gauge", "maxwell", nullptr, o);
  EXPECT_EQ(r["conventions"]["codiff_sign"], -1);
  const json p = run_check("maxwell_gauge", "maxwell");
  EXPECT_EQ(p["conventions"]["codiff_sign"], 1);
}

TEST(Check, DeterministicReport) {
  std::ostringstream a, b, err;
  cli::cmd_check(scenario("maxwell_golden"), "maxwell", "-", {}, a, err);
  cli::cmd_check(scenario("maxwell_golden"), "maxwell", "-", {}, b, err);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Report, ExitCodes) {
  cli::Report ok("x");
  ok.add("small", 1e-12, 1e-8);
  ok.add("info", 5.0, 1e-8, true);
  EXPECT_EQ(ok.exit_code(), cli::kOk);

  cli::Report failed("x");
  failed.add("large", 1.0, 1e-8);
  EXPECT_EQ(failed.exit_code(), cli::kCheckFailed);
  failed.add_implication("imp", true);
  EXPECT_EQ(failed.exit_code(), cli::kViolation);
  const json j = failed.to_json();
  EXPECT_EQ(j["exit"], cli::kViolation);
  EXPECT_TRUE(j["checks"][1]["violation"].get<bool>());

  cli::Report bound("x");
  bound.add_lower_bound("gap", 0.5, 0.1);
  EXPECT_EQ(bound.exit_code(), cli::kOk);
  EXPECT_TRUE(bound.to_json()["checks"][0]["lower_bound"].get<bool>());
  bound.add_lower_bound("gap2", 0.01, 0.1);
  EXPECT_EQ(bound.exit_code(), cli::kCheckFailed);

  cli::Report nan("x");
  nan.add("nan", std::nan(""), 1.0);
  EXPECT_FALSE(nan.checks()[0].pass);
  EXPECT_TRUE(nan.to_json()["checks"][0]["residual"].is_null());
}

TEST(Format, G17IsLocaleFreeRoundTrip) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 6.02214076e23, 0.0, 10.0}) {
    const std::string s = cli::format_g17(v);
    EXPECT_EQ(s.find(','), std::string::npos);
    EXPECT_EQ(std::stod(s), v);
  }
  EXPECT_EQ(cli::format_g17(0.1), "0.10000000000000001");
  EXPECT_EQ(cli::format_g17(10.0), "10");
}

TEST(Reduce, ProjectPotentialMatchesInverseG00) {
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_reduce(scenario("newtonian_block"), "project", "-", out, err), 0) << err.str();
  const json j = json::parse(out.str());
  EXPECT_EQ(j["provenance"], "geodesic_projection");
  const Expr U = parse(j["potential"].get<std::string>(), 3);
  // E0 = c = 1: U = ½ g^00 = ½ / g00.
  for (const auto& x : sample_points(SampleBox::cube(3, 3, 5, 20))) {
    const double r = x.norm();
    EXPECT_NEAR(eval_at(U, x), 0.5 / (-(1 - 2 / r)), 1e-10);
  }
}

TEST(Reduce, ConstrainPotentialIsMinusHalfG00) {
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_reduce(scenario("newtonian_block"), "constrain", "-", out, err), 0) << err.str();
  const json j = json::parse(out.str());
  const Expr U = parse(j["potential"].get<std::string>(), 3);
  for (const auto& x : sample_points(SampleBox::cube(3, 3, 5, 20))) EXPECT_NEAR(eval_at(U, x), 0.5 * (1 - 2 / x.norm()), 1e-10);
}

TEST(Reduce, ScenarioRoundTrip) {
  for (const char* mode : {"project", "constrain"}) {
    for (const char* name : {"newtonian_block", "time_constraint"}) {
      std::ostringstream out, err;
      ASSERT_EQ(cli::cmd_reduce(scenario(name), mode, "-", out, err), 0) << err.str();
      const json j = json::parse(out.str());
      const Scenario s = parse_scenario(j["scenario"].get<std::string>());
      EXPECT_EQ(s.dim() + 1, load_scenario(scenario(name)).dim());
      ASSERT_TRUE(s.potential.has_value());
      EXPECT_EQ(to_string(*s.potential), j["potential"].get<std::string>());
      const json r = cli::check_report(s, "newton");
      EXPECT_EQ(r["exit"], 0) << name << " " << mode << "\n" << r.dump(2);
    }
  }
}

TEST(Reduce, NonBlockMetricNamesEntry) {
  TempDir d;
  const std::string text = R"(name = "skew"
[chart]
dim = 3
time_index = 1
[metric]
g11 = "-1"
g12 = "0.1*x3"
g22 = "1"
g33 = "1"
[constants]
E0 = 1.0
)";
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_reduce(d.write("skew.toml", text), "project", "-", out, err), cli::kConfig);
  EXPECT_NE(err.str().find("g12"), std::string::npos) << err.str();
  EXPECT_EQ(cli::cmd_reduce(d.write("skew.toml", text), "constrain", "-", out, err), cli::kConfig);
}
