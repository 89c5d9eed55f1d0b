// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Presets run end to end through the same code path as `phaseflow preset`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "phaseflow/cli.hpp"
#include "phaseflow/gaussian.hpp"

namespace fs = std::filesystem;
namespace cli = phaseflow::cli;
using nlohmann::json;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "phaseflow_acceptance";

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PresetRun {
  fs::path dir;
  json summary;
  double seconds = 0.0;
  cli::Scenario scenario;
};

std::map<std::string, PresetRun> cache;

const PresetRun& preset(const std::string& name) {
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  PresetRun r;
  r.scenario = cli::parse_scenario(cli::find_preset(name).yaml);
  r.dir = kScratch / name;
  fs::remove_all(r.dir);
  r.scenario.output = r.dir;
  const auto start = std::chrono::steady_clock::now();
  cli::run(r.scenario, cli::find_preset(name).yaml);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.summary = json::parse(slurp(r.dir / "summary.json"));
  return cache.emplace(name, std::move(r)).first->second;
}

// (n, k) -> samples of <label>.moments.csv
using Series = std::map<std::pair<int, int>, std::vector<double>>;

Series moments(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing " + file.string());
  std::string line;
  std::getline(in, line);
  Series out;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string t, n, k, v;
    std::getline(ss, t, ',');
    std::getline(ss, n, ',');
    std::getline(ss, k, ',');
    std::getline(ss, v, ',');
    out[{std::stoi(n), std::stoi(k)}].push_back(std::stod(v));
  }
  return out;
}

// largest |a - b| over time, relative to the peak |a| of the same component
double componentwise_relative(const Series& a, const Series& b, int max_order) {
  double worst = 0.0;
  for (const auto& [nk, va] : a) {
    if (nk.first + nk.second > max_order || nk.first + nk.second == 0) continue;
    const auto& vb = b.at(nk);
    if (va.size() != vb.size()) throw std::runtime_error("sample counts differ");
    double peak = 0.0;
    for (double v : va) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < va.size(); ++i) worst = std::max(worst, std::abs(va[i] - vb[i]) / peak);
  }
  return worst;
}

double number(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

struct TdvpDrift {
  double constraint = 0.0;
  double energy = 0.0;
};

TdvpDrift tdvp_drift(const cli::Scenario& s, double dt) {
  using namespace phaseflow;
  const auto run = propagate_gaussian(TdvpState::pure(s.initial, s.hbar), s.potential, GaussianRule::tdvp, dt,
                                      10.0 * s.dynamical_time, 1);
  if (!run.ok()) throw std::runtime_error("tdvp failed: " + run.failure_reason);
  TdvpDrift d;
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    d.constraint = std::max(d.constraint, std::abs(run.constraint_residual[i]));
    d.energy = std::max(d.energy, std::abs(run.energy[i] - run.energy[0]) / std::abs(run.energy[0]));
  }
  return d;
}

}  // namespace

int main() {
  fs::create_directories(kScratch);

  report(1, "TDVP equals the M=2 Gaussian-closed hierarchy (quartic, both flavors)", [] {
    const auto& r = preset("quartic-semiquantum");
    const auto tdvp = moments(r.dir / "tdvp.moments.csv");
    const double c = componentwise_relative(tdvp, moments(r.dir / "hierarchy-classical.moments.csv"), 2);
    const double q = componentwise_relative(tdvp, moments(r.dir / "hierarchy-quantum.moments.csv"), 2);
    const double span = number(r.summary["treatments"]["tdvp"]["t_final"]) / r.scenario.dynamical_time;
    return Verdict{c <= 1e-10 && q <= 1e-10 && span >= 10.0 - 1e-9,
                   "classical " + g(c) + ", quantum " + g(q) + " (tol 1e-10) over " + g(span) + " dynamical times"};
  });

  report(2, "first quantum correction to d<p^3>/dt (cubic)", [] {
    const auto& r = preset("cubic-third-moment");
    const double residual = number(r.summary["eq15_residual"]);
    const auto& ens = r.summary["p3_rate_check"]["ensemble"];
    const double z = number(ens["z"]);
    double n = 0.0;
    for (const auto& t : r.scenario.treatments)
      if (t.kind == cli::TreatmentKind::ensemble) n = static_cast<double>(t.particles);
    return Verdict{residual <= 0.01 && std::abs(z) <= 4.0 && n >= 1e6,
                   "split-step relative residual " + g(residual) + " (tol 0.01), ensemble z " + g(z) +
                       " (tol 4) with N = " + g(n)};
  });

  report(3, "TDVP constraint and energy conservation, RK4 order", [] {
    const auto s = cli::parse_scenario(cli::find_preset("quartic-semiquantum").yaml);
    const double dt = 1e-3 * s.dynamical_time;  // the scenario default, not the preset's finer step
    const auto full = tdvp_drift(s, dt);
    const auto half = tdvp_drift(s, dt / 2);
    const double rc = full.constraint / half.constraint;
    const double re = full.energy / half.energy;
    const bool ok = full.constraint <= 1e-8 && full.energy <= 1e-8 && rc >= 8 && rc <= 32 && re >= 8 && re <= 32;
    return Verdict{ok, "constraint " + g(full.constraint) + ", energy " + g(full.energy) +
                           " (tol 1e-8); halving dt shrinks them " + g(rc) + "x and " + g(re) + "x (want 8..32)"};
  });

  report(4, "Heller energy drift law", [] {
    const auto& quartic = preset("heller-drift").summary["treatments"]["heller"]["drift_check"];
    const auto& harmonic = preset("harmonic-exact").summary["treatments"]["heller"]["drift_check"];
    const double rel = number(quartic["max_rel_error"]);
    const double checked = number(quartic["points_checked"]);
    const double law = number(harmonic["max_abs_drift"]);
    const double fd = number(harmonic["max_abs_rate_where_drift_vanishes"]);
    return Verdict{rel <= 1e-6 && checked > 0 && law <= 1e-12 && fd <= 1e-12,
                   "quartic max rel error " + g(rel) + " at " + g(checked) + " points (tol 1e-6); harmonic drift " +
                       g(law) + ", measured rate " + g(fd) + " (tol 1e-12)"};
  });

  report(5, "Lyapunov calibration", [] {
    double inverted = std::nan(""), harmonic = std::nan("");
    for (const auto& l : preset("inverted-lyapunov").summary["lyapunov"])
      if (l["system"] == "tangent-2d") inverted = number(l["lambda_max"]);
    for (const auto& l : preset("harmonic-exact").summary["lyapunov"])
      if (l["system"] == "tangent-2d") harmonic = number(l["lambda_max"]);
    return Verdict{std::abs(inverted - 2.0) <= 0.02 && std::abs(harmonic) <= 1e-3,
                   "inverted oscillator " + g(inverted) + " (want 2 +- 1%), harmonic " + g(harmonic) + " (tol 1e-3)"};
  });

  report(6, "semiquantum chaos in the quartic scan", [] {
    const auto& r = preset("quartic-semiquantum");
    std::map<std::pair<double, double>, std::pair<json, json>> points;
    for (const auto& l : r.summary["lyapunov"]) {
      auto& slot = points[{number(l["xbar"]), number(l["cxx"])}];
      (l["system"] == "gaussian-4d" ? slot.first : slot.second) = l;
    }
    std::string best = "no qualifying point";
    bool found = false;
    for (const auto& [key, pair] : points) {
      if (pair.first.is_null() || pair.second.is_null()) continue;
      const double l4 = number(pair.first["lambda_max"]), se = number(pair.first["stderr"]);
      const double l2 = number(pair.second["lambda_max"]);
      if (se > 0.0 && l4 >= 3.0 * se && std::abs(l2) <= 1e-3) {
        found = true;
        best = "xbar " + g(key.first) + ", cxx " + g(key.second) + ": 4D " + g(l4) + " +- " + g(se) + ", 2D " + g(l2);
        break;
      }
    }
    return Verdict{found && r.seconds <= 600.0, best + "; preset ran in " + g(r.seconds) + " s (limit 600)"};
  });

  report(7, "Hudson dichotomy", [] {
    const auto& t = preset("two-packet-hudson").summary["treatments"];
    const double single = number(t["single"]["wigner_min_over_max_run"]);
    const double cat = number(t["cat"]["wigner_min_over_max_initial"]);
    return Verdict{single >= -1e-8 && cat <= -0.1,
                   "single min/max " + g(single) + " (want >= -1e-8), two-packet " + g(cat) + " (want <= -0.1)"};
  });

  report(8, "sigma_n selectivity", [] {
    const auto& r = preset("sigma-n-quartic");
    const auto& t = r.summary["treatments"];
    const auto drift = [&](const char* label, const char* key) { return number(t[label]["conservation"][key]); };
    const double s2 = drift("schrodinger", "sigma2_max_rel_drift");
    const double s4 = drift("schrodinger", "sigma4_max_rel_drift");
    const double span = number(t["schrodinger"]["t_final"]) / r.scenario.dynamical_time;
    const double r2 = drift("liouville-coarse", "sigma2_max_rel_drift") / drift("liouville-fine", "sigma2_max_rel_drift");
    const double r3 = drift("liouville-coarse", "sigma3_max_rel_drift") / drift("liouville-fine", "sigma3_max_rel_drift");
    const double lspan = number(t["liouville-fine"]["t_final"]) / r.scenario.dynamical_time;
    return Verdict{s2 <= 1e-3 && s4 > 1e-2 && span >= 5.0 - 1e-9 && r2 >= 4.0 && r3 >= 4.0,
                   "split-step over " + g(span) + " dynamical times: sigma2 drift " + g(s2) + " (tol 1e-3), sigma4 " +
                       g(s4) + " (want > 1e-2); liouville refinement over " + g(lspan) +
                       " dynamical times shrinks sigma2 drift " + g(r2) + "x, sigma3 " + g(r3) + "x (want >= 4)"};
  });

  report(9, "TDVP trajectories do not depend on hbar", [] {
    auto run = [](const std::string& hbar) {
      const std::string yaml = "name: kinematic\nhbar: " + hbar + R"(
potential: {coeffs: [0, 0, -2, 0, 1]}
initial: {xbar: 1.0, pbar: 0.2, cxx: 0.3, cxp: 0.05, cpp: 1.2, pure: false}
integrator: {dynamical_times: 10}
treatments: [{kind: tdvp}]
)";
      auto s = cli::parse_scenario(yaml);
      s.output = kScratch / ("kinematic-" + hbar);
      fs::remove_all(s.output);
      cli::run(s, yaml);
      return s.output;
    };
    const auto a = run("1.0");
    const auto b = run("0.05");
    const bool traj = slurp(a / "tdvp.trajectory.csv") == slurp(b / "tdvp.trajectory.csv");
    const bool mom = slurp(a / "tdvp.moments.csv") == slurp(b / "tdvp.moments.csv");
    return Verdict{traj && mom, std::string("hbar 1 vs 0.05: trajectory ") + (traj ? "identical" : "differs") +
                                    ", moments " + (mom ? "identical" : "differ")};
  });

  report(10, "harmonic cross-oracle agreement", [] {
    const auto& r = preset("harmonic-exact");
    const std::vector<std::string> need = {"ensemble", "schrodinger", "liouville", "tdvp", "heller", "hierarchy-classical"};
    for (const auto& label : need)
      if (!r.summary["treatments"].contains(label) || r.summary["treatments"][label]["status"] != "ok")
        return Verdict{false, label + " missing or failed"};
    double worst_exact = 0.0, worst_z = 0.0;
    std::string where;
    for (const auto& d : r.summary["max_pairwise_deviation"]) {
      const double abs = number(d["max_abs"]);
      if (d["max_z"].is_null()) {
        if (abs > worst_exact) {
          worst_exact = abs;
          where = d["a"].get<std::string>() + "/" + d["b"].get<std::string>();
        }
      } else if (abs > 1e-6) {
        worst_z = std::max(worst_z, std::abs(number(d["max_z"])));
      }
    }
    const double periods = number(r.summary["treatments"]["tdvp"]["t_final"]) / r.scenario.dynamical_time;
    return Verdict{worst_exact <= 1e-6 && worst_z <= 4.0 && periods >= 10.0 - 1e-9,
                   "deterministic pairs " + g(worst_exact) + " (" + where + ", tol 1e-6), ensemble pairs within " +
                       g(worst_z) + " standard errors (tol 4) over " + g(periods) + " periods"};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
