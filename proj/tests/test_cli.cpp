#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "phaseflow/cli.hpp"

using namespace phaseflow::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "phaseflow_test_cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kScratch);
  const auto p = kScratch / name;
  std::ofstream(p) << text;
  return p;
}

// exit status of the real binary, output discarded
int invoke(const std::string& args) {
  const std::string cmd = std::string(PHASEFLOW_BINARY) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string field_of(const std::string& yaml) {
  try {
    parse_scenario(yaml);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string message_of(const std::string& yaml) {
  try {
    parse_scenario(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const std::string kSmall = R"(name: small
potential: {coeffs: [0, 0, 0.5]}
initial: {xbar: 1.0, pbar: 0.0, cxx: 0.5, pure: true}
integrator: {t_final: 1.0, output_interval: 0.1}
)";

std::string with_output(const std::string& body, const fs::path& out) {
  return body + "output: " + out.string() + "\n";
}

}  // namespace

TEST_CASE("shipped presets are exactly the eight scenarios") {
  const std::set<std::string> want = {"harmonic-exact",      "free-spreading",  "cubic-third-moment",
                                      "quartic-semiquantum", "inverted-lyapunov", "two-packet-hudson",
                                      "heller-drift",        "sigma-n-quartic"};
  std::set<std::string> got;
  for (const auto& p : presets()) got.insert(std::string(p.name));
  CHECK(presets().size() == 8);
  CHECK(got == want);
  for (const auto& p : presets()) CHECK_NOTHROW(parse_scenario(p.yaml));
  CHECK_THROWS_AS(find_preset("harmonic"), ConfigError);
}

TEST_CASE("negative cxx names initial.cxx") {
  const std::string yaml = R"(potential: {coeffs: [0, 0, 0.5]}
initial: {xbar: 0, pbar: 0, cxx: -0.5, cpp: 0.5}
treatments: [{kind: tdvp}]
)";
  CHECK(field_of(yaml) == "initial.cxx");
}

TEST_CASE("pure-tagged state off the purity constraint is rejected") {
  const std::string yaml = R"(potential: {coeffs: [0, 0, 0.5]}
initial: {xbar: 0, pbar: 0, cxx: 0.5, cpp: 1.0, pure: true}
treatments: [{kind: tdvp}]
)";
  CHECK(field_of(yaml) == "initial.pure");
  const auto msg = message_of(yaml);
  CHECK(msg.find("purity constraint") != std::string::npos);
  CHECK(msg.find("hbar^2/4") != std::string::npos);
}

TEST_CASE("static validation of treatments and keys") {
  SUBCASE("no treatments") { CHECK(field_of(kSmall) == "treatments"); }
  SUBCASE("unknown key") { CHECK(field_of(kSmall + "treatments: [{kind: tdvp, dtt: 0.1}]\n") == "treatments[0].dtt"); }
  SUBCASE("unknown kind") { CHECK(field_of(kSmall + "treatments: [{kind: wkb}]\n") == "treatments[0].kind"); }
  SUBCASE("duplicate labels") {
    CHECK(field_of(kSmall + "treatments: [{kind: tdvp}, {kind: tdvp}]\n") == "treatments[1].label");
  }
  SUBCASE("sub-hbar state for a quantum treatment") {
    const std::string yaml = R"(potential: {coeffs: [0, 0, 0.5]}
initial: {xbar: 0, pbar: 0, cxx: 0.1, cpp: 0.1}
treatments: [{kind: hierarchy, flavor: quantum}]
)";
    CHECK(field_of(yaml) == "initial.cxx");
    const std::string classical = R"(potential: {coeffs: [0, 0, 0.5]}
initial: {xbar: 0, pbar: 0, cxx: 0.1, cpp: 0.1}
treatments: [{kind: hierarchy, flavor: classical}]
)";
    CHECK_NOTHROW(parse_scenario(classical));
  }
  SUBCASE("grid too small for the packet") {
    CHECK(field_of(kSmall + "treatments: [{kind: schrodinger, points: 64, half_width: 1}]\n").rfind("treatments[0]", 0) == 0);
  }
  SUBCASE("hierarchy order out of range") {
    CHECK(field_of(kSmall + "treatments: [{kind: hierarchy, order: 9}]\n") == "treatments[0].order");
  }
  SUBCASE("treatment horizon beyond the scenario") {
    CHECK(field_of(kSmall + "treatments: [{kind: tdvp, t_final: 2.0}]\n") == "treatments[0].t_final");
  }
}

TEST_CASE("pure state without cpp gets the minimum-uncertainty momentum spread") {
  const auto s = parse_scenario(kSmall + "hbar: 0.5\ntreatments: [{kind: tdvp}]\n");
  CHECK(s.initial.det() == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(s.treatments.front().label == "tdvp");
}

TEST_CASE("resample is linear and undefined outside the samples") {
  const std::vector<double> t = {0.0, 1.0, 2.0};
  const std::vector<double> v = {0.0, 10.0, 30.0};
  CHECK(resample(t, v, 0.5) == doctest::Approx(5.0));
  CHECK(resample(t, v, 1.5) == doctest::Approx(20.0));
  CHECK(resample(t, v, 2.0) == doctest::Approx(30.0));
  CHECK(std::isnan(resample(t, v, 2.5)));
}

TEST_CASE("exit codes") {
  fs::remove_all(kScratch);
  const auto good = write_config("good.yaml", with_output(kSmall + "treatments: [{kind: tdvp}]\n", kScratch / "good"));
  const auto bad = write_config("bad.yaml", "potential: {coeffs: [0, 0, 0.5]}\ninitial: {cxx: -1}\n");
  // the local harmonic fit of tga drives cxx negative in the double well; tdvp carries on
  const auto failing = write_config("failing.yaml", with_output(R"(name: failing
potential: {coeffs: [0, 0, -2, 0, 1]}
initial: {xbar: 1.0, pbar: 0.0, cxx: 1.0, pure: true}
integrator: {dynamical_times: 10}
treatments: [{kind: tga}, {kind: tdvp}]
)",
                                                               kScratch / "failing"));

  CHECK(invoke("validate " + good.string()) == 0);
  CHECK(invoke("validate " + bad.string()) == 2);
  CHECK(invoke("validate " + (kScratch / "missing.yaml").string()) == 2);
  CHECK(invoke("preset no-such-preset") == 2);
  CHECK(invoke("preset --list") == 0);
  CHECK(invoke("run " + good.string()) == 0);
  CHECK(invoke("run " + bad.string()) == 2);

  CHECK(invoke("run " + failing.string()) == 3);
  const json summary = json::parse(slurp(kScratch / "failing" / "summary.json"));
  CHECK(summary["treatments"]["tga"]["status"] == "failed");
  CHECK(summary["treatments"]["tga"]["failure_time"].get<double>() > 0.0);
  CHECK(summary["treatments"]["tdvp"]["status"] == "ok");
  CHECK(fs::exists(kScratch / "failing" / "tga.moments.csv"));
  CHECK(fs::exists(kScratch / "failing" / "tdvp.moments.csv"));
  CHECK(summary["failures"].size() == 1);
}

TEST_CASE("same config and seed give bit-identical CSVs") {
  const std::string body = kSmall + R"(treatments:
  - {kind: ensemble, particles: 2000}
  - {kind: liouville, points: 64, x_half_width: 7, p_half_width: 7, dt: 0.05}
  - {kind: tdvp}
  - {kind: hierarchy, order: 3, flavor: quantum, closure: zero-central-above-M}
)";
  const auto a = write_config("a.yaml", with_output(body + "seed: 7\n", kScratch / "a"));
  const auto b = write_config("b.yaml", with_output(body + "seed: 7\n", kScratch / "b"));
  const auto c = write_config("c.yaml", with_output(body + "seed: 8\n", kScratch / "c"));
  REQUIRE(invoke("run " + a.string()) == 0);
  REQUIRE(invoke("run " + b.string()) == 0);
  REQUIRE(invoke("run " + c.string()) == 0);

  int compared = 0;
  for (const auto& entry : fs::directory_iterator(kScratch / "a")) {
    if (entry.path().extension() != ".csv") continue;
    CHECK_MESSAGE(slurp(entry.path()) == slurp(kScratch / "b" / entry.path().filename()), entry.path().filename());
    ++compared;
  }
  CHECK(compared >= 8);

  json sa = json::parse(slurp(kScratch / "a" / "summary.json"));
  json sb = json::parse(slurp(kScratch / "b" / "summary.json"));
  sa["metadata"].erase("timestamp");
  sb["metadata"].erase("timestamp");
  sa["metadata"].erase("wall_seconds");
  sb["metadata"].erase("wall_seconds");
  CHECK(sa == sb);

  CHECK(slurp(kScratch / "a" / "ensemble.moments.csv") != slurp(kScratch / "c" / "ensemble.moments.csv"));
  CHECK(slurp(kScratch / "a" / "tdvp.moments.csv") == slurp(kScratch / "c" / "tdvp.moments.csv"));
}

TEST_CASE("every treatment emits conservation diagnostics") {
  const auto cfg = write_config("diag.yaml", with_output(kSmall + R"(treatments:
  - {kind: hierarchy, order: 4, flavor: classical, closure: zero-central-above-M}
  - {kind: mtga, packets: 3}
  - {kind: heller}
)",
                                                          kScratch / "diag"));
  REQUIRE(invoke("run " + cfg.string()) == 0);
  for (const std::string label : {"hierarchy", "mtga", "heller"}) {
    std::ifstream in(kScratch / "diag" / (label + ".diagnostics.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,energy,detC,norm,sigma2,sigma3,sigma4,constraint_residual");
  }
  const json summary = json::parse(slurp(kScratch / "diag" / "summary.json"));
  for (const auto& [label, entry] : summary["treatments"].items()) {
    CHECK_MESSAGE(entry["conservation"].contains("energy_max_rel_drift"), label);
    CHECK_MESSAGE(entry["conservation"].contains("detC_max_rel_drift"), label);
    CHECK_MESSAGE(entry["conservation"].contains("norm_max_rel_drift"), label);
    CHECK_MESSAGE(entry["conservation"].contains("sigma2_max_rel_drift"), label);
  }
}

TEST_CASE("compare.csv sits on the coarsest output grid") {
  const auto cfg = write_config("cmp.yaml", with_output(kSmall + R"(treatments:
  - {kind: tdvp, output_interval: 0.05}
  - {kind: hierarchy, output_interval: 0.25}
)",
                                                         kScratch / "cmp"));
  REQUIRE(invoke("run " + cfg.string()) == 0);
  std::ifstream in(kScratch / "cmp" / "compare.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,n,k,tdvp,hierarchy");
  std::set<double> times;
  while (std::getline(in, line)) times.insert(std::stod(line.substr(0, line.find(','))));
  REQUIRE(times.size() == 5);  // 0, 0.25, 0.5, 0.75, 1.0
  int i = 0;
  for (double t : times) CHECK(t == doctest::Approx(0.25 * i++).epsilon(1e-12));

  const json summary = json::parse(slurp(kScratch / "cmp" / "summary.json"));
  CHECK(summary["compare_spacing"].get<double>() == doctest::Approx(0.25));
  // both treatments are exact to integrator accuracy on the oscillator
  for (const auto& d : summary["max_pairwise_deviation"]) CHECK(d["max_abs"].get<double>() < 1e-9);
}

TEST_CASE("export flattens a run directory") {
  const auto cfg = write_config("exp.yaml", with_output(kSmall + "treatments: [{kind: tdvp}, {kind: hierarchy}]\n", kScratch / "exp"));
  REQUIRE(invoke("run " + cfg.string()) == 0);
  CHECK(invoke("export " + (kScratch / "exp").string()) == 0);
  std::ifstream in(kScratch / "exp" / "plotdata.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "treatment,table,t,quantity,value");
  std::set<std::string> tables;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string treatment, table;
    std::getline(ss, treatment, ',');
    std::getline(ss, table, ',');
    tables.insert(table);
    ++rows;
  }
  CHECK(rows > 100);
  CHECK(tables == std::set<std::string>{"moments", "compare", "diagnostics", "trajectory"});
  CHECK(invoke("export " + kScratch.string()) == 2);
}
