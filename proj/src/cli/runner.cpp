#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "phaseflow/cli.hpp"
#include "phaseflow/io.hpp"
#include "phaseflow/oracles.hpp"

namespace phaseflow::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

struct DiagRow {
  double t = 0.0;
  double energy = kNaN;
  double det_c = kNaN;
  double norm = kNaN;
  double sigma2 = kNaN;
  double sigma3 = kNaN;
  double sigma4 = kNaN;
  double constraint_residual = kNaN;
};

struct Result {
  const Treatment* spec = nullptr;
  double interval = 0.0;  // actual output spacing
  std::vector<double> times;
  std::vector<MomentSet> moments;
  std::vector<MomentSet> standard_errors;  // ensembles only
  std::vector<DiagRow> diag;
  std::vector<GaussianState> trajectory;   // Gaussian rules
  std::string closure;                     // hierarchy moment CSV column
  std::optional<double> failure_time;
  std::string failure_reason;
  bool failed = false;
  json extra = json::object();
};

int verbosity() {
  const char* v = std::getenv("PHASEFLOW_VERBOSITY");
  return v ? std::atoi(v) : 1;
}

void say(const std::string& line) {
  if (verbosity() > 0) std::cerr << line << '\n';
}

// FNV-1a over the label, so a treatment's stream does not depend on its position in the list.
std::uint64_t stream_seed(std::uint64_t seed, const std::string& label) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return seed ^ h;
}

struct Schedule {
  double dt;
  int stride;
  double interval;
  double t_final;
};

// The treatment's dt is shrunk so that its output interval is a whole number of steps.
Schedule schedule(const Scenario& s, const Treatment& t) {
  const double interval = t.output_interval.value_or(s.output_interval);
  const double wanted = t.dt.value_or(s.dt);
  const int stride = std::max(1, static_cast<int>(std::ceil(interval / wanted - 1e-9)));
  return {interval / stride, stride, interval, t.t_final.value_or(s.t_final)};
}

double gaussian_sigma2(const Covariance& c) { return c.det() > 0.0 ? 1.0 / (4.0 * kPi * std::sqrt(c.det())) : kNaN; }

double energy_of(const TrajectoryEnsemble& e, const PolynomialPotential& pot, double t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) acc += e.p[i] * e.p[i] / (2.0 * pot.mass()) + pot.evaluate(e.x[i], t);
  return acc / static_cast<double>(e.size());
}

double energy_of(const WavefunctionGrid& w, const PolynomialPotential& pot, double t) {
  const auto rho = momentum_density(w);
  const GridAxis pa = w.momentum_axis();
  double kin = 0.0, pot_e = 0.0;
  for (int j = 0; j < pa.n; ++j) kin += rho[j] * pa.at(j) * pa.at(j) * pa.step;
  for (int i = 0; i < w.x.n; ++i) pot_e += std::norm(w.psi[i]) * pot.evaluate(w.x.at(i), t) * w.x.step;
  return kin / (2.0 * w.mass) + pot_e;
}

double energy_of(const PhaseSpaceGrid& f, const PolynomialPotential& pot, double t) {
  double acc = 0.0;
  for (int i = 0; i < f.x.n; ++i) {
    const double v = pot.evaluate(f.x.at(i), t);
    for (int j = 0; j < f.p.n; ++j) acc += f.at(i, j) * (f.p.at(j) * f.p.at(j) / (2.0 * pot.mass()) + v);
  }
  return acc * f.cell();
}

// sum_ij w_i w_j N(mu_i - mu_j; C_i + C_j): the exact sigma2 of a Gaussian mixture
double mixture_sigma2(const GaussianSum& gs) {
  double acc = 0.0;
  for (std::size_t i = 0; i < gs.packets.size(); ++i)
    for (std::size_t j = 0; j < gs.packets.size(); ++j) {
      const auto& a = gs.packets[i];
      const auto& b = gs.packets[j];
      const double xx = a.cxx + b.cxx, xp = a.cxp + b.cxp, pp = a.cpp + b.cpp;
      const double det = xx * pp - xp * xp;
      const double dx = a.mean_x - b.mean_x, dp = a.mean_p - b.mean_p;
      const double q = (pp * dx * dx - 2.0 * xp * dx * dp + xx * dp * dp) / det;
      acc += gs.weights[i] * gs.weights[j] * std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(det));
    }
  return acc;
}

WavefunctionGrid initial_wavefunction(const Scenario& s, const Treatment& t) {
  const auto axis = GridAxis::centered(t.points, t.x_half_width, t.x_center);
  const double m = s.potential.mass();
  if (t.cat_separation <= 0.0) return wavefunction_from_gaussian(s.initial, axis, s.hbar, m);
  const double shift = 0.5 * t.cat_separation * std::sqrt(s.initial.cxx);
  GaussianState a = s.initial, b = s.initial;
  a.mean_x -= shift;
  b.mean_x += shift;
  return superpose(wavefunction_from_gaussian(a, axis, s.hbar, m), wavefunction_from_gaussian(b, axis, s.hbar, m));
}

void fail(Result& r, std::optional<double> t, const std::string& why) {
  r.failed = true;
  r.failure_time = t;
  r.failure_reason = why;
}

void run_ensemble(const Scenario& s, const Treatment& t, Result& r) {
  const Schedule sc = schedule(s, t);
  r.interval = sc.interval;
  auto e = sample_ensemble(s.initial, t.particles, stream_seed(s.seed, t.label));
  try {
    leapfrog_evolve(e, s.potential, {sc.dt, sc.t_final, sc.stride}, [&](double time, const TrajectoryEnsemble& x) {
      r.times.push_back(time);
      r.moments.push_back(moments_from_ensemble(x, std::max(2, s.moment_order)));
      r.standard_errors.push_back(moment_standard_errors(x, std::max(2, s.moment_order)));
      DiagRow d{time};
      d.energy = energy_of(x, s.potential, time);
      d.det_c = r.moments.back().covariance().det();
      d.norm = 1.0;
      r.diag.push_back(d);
    }, t.escape_bound);
  } catch (const OracleError& err) {
    fail(r, err.time(), err.what());
  }
  r.extra["particles"] = t.particles;
  r.extra["seed"] = stream_seed(s.seed, t.label);
}

void run_schrodinger(const Scenario& s, const Treatment& t, Result& r) {
  const Schedule sc = schedule(s, t);
  r.interval = sc.interval;
  auto w = initial_wavefunction(s, t);
  double neg_min = std::numeric_limits<double>::infinity();
  double neg_initial = kNaN;
  try {
    splitstep_evolve(w, s.potential, {sc.dt, sc.t_final, sc.stride}, [&](double time, const WavefunctionGrid& x) {
      r.times.push_back(time);
      DiagRow d{time};
      d.norm = x.norm();
      d.energy = energy_of(x, s.potential, time);
      if (t.wigner_diagnostics) {
        const auto wig = wigner_transform(x);
        r.moments.push_back(moments_from_wavefunction(x, wig, std::max(2, s.moment_order)));
        d.sigma2 = sigma_n(wig, 2);
        d.sigma3 = sigma_n(wig, 3);
        d.sigma4 = sigma_n(wig, 4);
        const auto [lo, hi] = std::minmax_element(wig.f.begin(), wig.f.end());
        const double ratio = *lo / *hi;
        if (r.times.size() == 1) neg_initial = ratio;
        neg_min = std::min(neg_min, ratio);
      } else {
        r.moments.push_back(moments_from_wavefunction(x, std::max(2, s.moment_order)));
      }
      d.det_c = r.moments.back().covariance().det();
      r.diag.push_back(d);
    });
  } catch (const OracleError& err) {
    fail(r, err.time(), err.what());
  } catch (const GridError& err) {
    fail(r, r.times.empty() ? 0.0 : r.times.back(), err.what());
  }
  if (t.wigner_diagnostics) {
    r.extra["wigner_min_over_max_initial"] = neg_initial;
    r.extra["wigner_min_over_max_run"] = neg_min;
  }
  r.extra["points"] = t.points;
  r.extra["cat_separation"] = t.cat_separation;
}

void run_liouville(const Scenario& s, const Treatment& t, Result& r) {
  const Schedule sc = schedule(s, t);
  r.interval = sc.interval;
  const int np = t.p_points > 0 ? t.p_points : t.points;
  auto f = phase_grid_from_gaussian(s.initial, GridAxis::centered(t.points, t.x_half_width, t.x_center),
                                    GridAxis::centered(np, t.p_half_width, t.p_center));
  LiouvilleOptions opts;
  opts.substeps = t.substeps;
  try {
    liouville_evolve(f, s.potential, {sc.dt, sc.t_final, sc.stride}, [&](double time, const PhaseSpaceGrid& x) {
      r.times.push_back(time);
      r.moments.push_back(moments_from_grid(x, std::max(2, s.moment_order)));
      DiagRow d{time};
      d.norm = x.integral();
      d.energy = energy_of(x, s.potential, time);
      d.det_c = r.moments.back().covariance().det();
      d.sigma2 = sigma_n(x, 2);
      d.sigma3 = sigma_n(x, 3);
      d.sigma4 = sigma_n(x, 4);
      r.diag.push_back(d);
    }, opts);
  } catch (const OracleError& err) {
    fail(r, err.time(), err.what());
  }
  r.extra["grid"] = {t.points, np};
  r.extra["substeps"] = t.substeps;
}

void run_hierarchy(const Scenario& s, const Treatment& t, Result& r) {
  const Schedule sc = schedule(s, t);
  r.interval = sc.interval;
  const HierarchySpec spec{s.potential, t.order, t.flavor, s.hbar, t.closure};
  r.closure = std::string(to_string(t.closure));
  const auto run = integrate_hierarchy(spec, moments_from_gaussian(s.initial, t.order, t.flavor), sc.dt, sc.t_final,
                                       sc.stride);
  const bool gaussian_pair = t.closure == Closure::gaussian_wick && t.order == 2;
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    r.times.push_back(run.times[i]);
    r.moments.push_back(run.moments[i]);
    DiagRow d{run.times[i]};
    d.energy = run.diagnostics[i].energy;
    d.det_c = run.diagnostics[i].det_c;
    d.norm = run.moments[i](0, 0);
    d.constraint_residual = run.diagnostics[i].constraint_residual;
    if (gaussian_pair) d.sigma2 = gaussian_sigma2(run.moments[i].covariance());
    r.diag.push_back(d);
  }
  if (!run.ok()) fail(r, run.failure_time, run.failure_reason);
  r.extra["order"] = t.order;
  r.extra["closure"] = to_string(t.closure);
  r.extra["flavor"] = to_string(t.flavor);
}

TdvpState starting_tdvp(const Scenario& s) {
  return s.pure ? TdvpState::pure(s.initial, s.hbar) : TdvpState::from_covariances(s.initial);
}

void run_gaussian(const Scenario& s, const Treatment& t, Result& r) {
  const Schedule sc = schedule(s, t);
  r.interval = sc.interval;
  const TdvpState s0 = starting_tdvp(s);
  const auto run = propagate_gaussian(s0, s.potential, t.rule, sc.dt, sc.t_final, sc.stride);
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const GaussianState& g = run.states[i];
    r.times.push_back(run.times[i]);
    r.trajectory.push_back(g);
    r.moments.push_back(moments_from_gaussian(g, std::max(2, s.moment_order)));
    DiagRow d{run.times[i]};
    d.energy = run.energy[i];
    d.det_c = g.det();
    d.norm = 1.0;
    d.sigma2 = gaussian_sigma2({g.cxx, g.cxp, g.cpp});
    d.constraint_residual = run.constraint_residual[i];
    r.diag.push_back(d);
  }
  if (!run.ok()) fail(r, run.failure_time, run.failure_reason);
  r.extra["rule"] = to_string(t.rule);
  r.extra["sigma2"] = s0.sigma2;

  // energy-drift law of the Heller flow, checked at every output point against a
  // five-point derivative of the truncated energy from short local steps
  if (t.kind == TreatmentKind::heller && s.potential.is_static()) {
    const double h = 2e-4 * s.dynamical_time;
    double worst = 0.0, largest = 0.0, flat = 0.0;
    std::size_t checked = 0;
    for (const auto& g : run.states) {
      const double fd = heller_energy_rate_fd(g, s.potential, h);
      const double law = heller_energy_drift(g, s.potential);
      largest = std::max(largest, std::abs(law));
      if (std::abs(law) > 1e-10) {
        worst = std::max(worst, std::abs(fd - law) / std::abs(law));
        ++checked;
      } else {
        flat = std::max(flat, std::abs(fd));
      }
    }
    r.extra["drift_check"] = {{"max_rel_error", worst},
                              {"points_checked", checked},
                              {"max_abs_drift", largest},
                              {"max_abs_rate_where_drift_vanishes", flat}};
  }
}

void run_mtga(const Scenario& s, const Treatment& t, Result& r) {
  const Schedule sc = schedule(s, t);
  r.interval = sc.interval;
  const GaussianSum start =
      t.explicit_sum.packets.empty() ? GaussianSum::auto_tile(s.initial, t.packets, t.radius) : t.explicit_sum;
  const auto run = mtga_propagate(start, s.potential, t.rule, sc.dt, sc.t_final, sc.stride);
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const GaussianSum& gs = run.sums[i];
    r.times.push_back(run.times[i]);
    r.moments.push_back(mtga_moments(gs, std::max(2, s.moment_order)));
    DiagRow d{run.times[i]};
    double e = 0.0, w = 0.0;
    for (std::size_t j = 0; j < gs.packets.size(); ++j) {
      e += gs.weights[j] * rule_energy(t.rule, gs.packets[j], s.potential, run.times[i]);
      w += gs.weights[j];
    }
    d.energy = e;
    d.norm = w;
    d.det_c = r.moments.back().covariance().det();
    d.sigma2 = mixture_sigma2(gs);
    r.diag.push_back(d);
  }
  if (!run.ok()) fail(r, run.failure_time, run.failure_reason);
  r.extra["packets"] = start.packets.size();
  r.extra["rule"] = to_string(t.rule);
}

void run_lyapunov(const Scenario& s, const Treatment& t, Result& r) {
  std::vector<std::pair<ScanPoint, TdvpState>> starts;
  if (t.scan.empty()) {
    starts.push_back({{s.initial.mean_x, s.initial.mean_p, s.initial.cxx}, starting_tdvp(s)});
  } else {
    for (const auto& p : t.scan)
      starts.push_back({p, TdvpState::pure(GaussianState::pure(p.xbar, p.pbar, p.cxx, 0.0, s.hbar), s.hbar)});
  }
  json reports = json::array();
  for (const auto& [point, state] : starts)
    for (auto system : t.systems) {
      LyapunovJob job;
      job.system = system;
      job.potential = s.potential;
      job.initial = state;
      job.dt = t.dt.value_or(s.dt);
      job.renorm_interval = t.renorm_interval * s.dynamical_time;
      job.t_total = t.t_total;
      job.transient_fraction = t.transient_fraction;
      job.blocks = t.blocks;
      const auto res = lyapunov_max(job);
      json rep = {{"system", to_string(res.system)},
                  {"lambda_max", res.lambda_max},
                  {"stderr", res.standard_error},
                  {"blocks", res.blocks},
                  {"t_total", res.t_total},
                  {"renorm_interval", res.renorm_interval},
                  {"converged", res.converged},
                  {"xbar", point.xbar},
                  {"pbar", point.pbar},
                  {"cxx", point.cxx},
                  {"block_estimates", res.block_estimates}};
      if (!res.failure_reason.empty()) {
        rep["failure"] = res.failure_reason;
        fail(r, std::nullopt, std::string(to_string(system)) + ": " + res.failure_reason);
      }
      say("  " + std::string(to_string(system)) + " at (xbar=" + io::format_double(point.xbar) +
          ", cxx=" + io::format_double(point.cxx) + "): lambda = " + io::format_double(res.lambda_max) + " +- " +
          io::format_double(res.standard_error));
      reports.push_back(rep);
    }
  r.extra["reports"] = reports;
}

// d<p^3>/dt at t = 0 from two split-step steps against the classical Wick value
// plus the hbar^2/4 <V'''> correction.
json p3_rate_check(const Scenario& s, const Treatment& t, const std::vector<Result>& results) {
  const double h = 1e-4 * s.dynamical_time;
  const auto series = splitstep_series(initial_wavefunction(s, t), s.potential, {h, 2 * h, 1});
  auto p3 = [&](std::size_t i) { return moments_from_wavefunction(series[i], 3)(0, 3); };
  const double fd = (-3.0 * p3(0) + 4.0 * p3(1) - p3(2)) / (2.0 * h);

  const int d = s.potential.degree();
  const GaussianState& g = s.initial;
  const MomentSet gm = gaussian_raw_moments(g.mean_x, g.mean_p, {g.cxx, g.cxp, g.cpp}, d + 2);
  const auto v1 = s.potential.derivative_coefficients(1, 0.0);
  const auto v3 = s.potential.derivative_coefficients(3, 0.0);
  double classical = 0.0, v3_mean = 0.0;
  for (std::size_t j = 0; j < v1.size(); ++j) classical -= 3.0 * v1[j] * gm(static_cast<int>(j), 2);
  for (std::size_t j = 0; j < v3.size(); ++j) v3_mean += v3[j] * gm(static_cast<int>(j), 0);
  const double correction = s.hbar * s.hbar / 4.0 * v3_mean;
  const double expected = classical + correction;
  json out = {{"fd_rate", fd},
              {"classical_rate", classical},
              {"quantum_correction", correction},
              {"expected", expected},
              {"relative_residual", std::abs(fd - expected) / std::max(std::abs(expected), 1e-300)}};

  // the classical part measured on the sampled ensemble instead of the Wick sum
  for (const auto& r : results) {
    if (r.spec->kind != TreatmentKind::ensemble) continue;
    auto e = sample_ensemble(s.initial, r.spec->particles, stream_seed(s.seed, r.spec->label));
    const auto n = static_cast<double>(e.size());
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double v = -3.0 * e.p[i] * e.p[i] * horner<double>(v1, e.x[i]);
      mean += v;
      sq += v * v;
    }
    mean /= n;
    const double se = std::sqrt(std::max(sq / n - mean * mean, 0.0) / (n - 1.0));
    out["ensemble"] = {{"label", r.spec->label},
                       {"classical_rate", mean},
                       {"standard_error", se},
                       {"z", (fd - mean - correction) / se}};
    break;
  }
  return out;
}

void write_outputs(const std::filesystem::path& dir, const Scenario& s, const Result& r) {
  const std::string base = r.spec->label;
  if (!r.moments.empty()) {
    io::MomentCsv csv(dir / (base + ".moments.csv"), r.spec->kind == TreatmentKind::hierarchy);
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      const int order = std::min(s.moment_order, r.moments[i].order());
      csv.write(r.times[i], r.moments[i].truncated(order), r.closure);
    }
  }
  if (!r.diag.empty()) {
    std::ofstream out(dir / (base + ".diagnostics.csv"));
    out << "t,energy,detC,norm,sigma2,sigma3,sigma4,constraint_residual\n";
    auto cell = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); };
    for (const auto& d : r.diag)
      out << io::format_double(d.t) << ',' << cell(d.energy) << ',' << cell(d.det_c) << ',' << cell(d.norm) << ','
          << cell(d.sigma2) << ',' << cell(d.sigma3) << ',' << cell(d.sigma4) << ',' << cell(d.constraint_residual)
          << '\n';
  }
  if (!r.trajectory.empty()) {
    std::ofstream out(dir / (base + ".trajectory.csv"));
    out << "t,xbar,pbar,cxx,cxp,cpp,energy,constraint_residual\n";
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
      const auto& g = r.trajectory[i];
      out << io::format_double(r.times[i]) << ',' << io::format_double(g.mean_x) << ','
          << io::format_double(g.mean_p) << ',' << io::format_double(g.cxx) << ',' << io::format_double(g.cxp) << ','
          << io::format_double(g.cpp) << ',' << io::format_double(r.diag[i].energy) << ','
          << io::format_double(r.diag[i].constraint_residual) << '\n';
    }
  }
  if (r.spec->kind == TreatmentKind::lyapunov) {
    const json reports = r.extra.value("reports", json::array());
    std::ofstream(dir / (base + ".lyapunov.json")) << reports.dump(2) << '\n';
    std::ofstream out(dir / (base + ".blocks.csv"));
    out << "system,xbar,pbar,cxx,block,lambda\n";
    for (const auto& rep : reports) {
      int b = 0;
      for (const auto& v : rep["block_estimates"])
        out << rep["system"].get<std::string>() << ',' << io::format_double(rep["xbar"].get<double>()) << ','
            << io::format_double(rep["pbar"].get<double>()) << ',' << io::format_double(rep["cxx"].get<double>())
            << ',' << b++ << ',' << io::format_double(v.get<double>()) << '\n';
    }
  }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Largest |q(t) - q(0)| / |q(0)| over the run, skipping undefined entries.
double max_rel_drift(const std::vector<DiagRow>& rows, double DiagRow::*field) {
  if (rows.empty()) return kNaN;
  const double q0 = rows.front().*field;
  if (!std::isfinite(q0)) return kNaN;
  double worst = 0.0;
  for (const auto& d : rows) {
    const double q = d.*field;
    if (!std::isfinite(q)) continue;
    worst = std::max(worst, std::abs(q - q0) / std::max(std::abs(q0), 1e-300));
  }
  return worst;
}

json conservation(const Result& r) {
  json c;
  c["energy_initial"] = r.diag.empty() ? json(nullptr) : nullable(r.diag.front().energy);
  c["energy_max_rel_drift"] = nullable(max_rel_drift(r.diag, &DiagRow::energy));
  c["detC_max_rel_drift"] = nullable(max_rel_drift(r.diag, &DiagRow::det_c));
  c["norm_max_rel_drift"] = nullable(max_rel_drift(r.diag, &DiagRow::norm));
  c["sigma2_max_rel_drift"] = nullable(max_rel_drift(r.diag, &DiagRow::sigma2));
  c["sigma3_max_rel_drift"] = nullable(max_rel_drift(r.diag, &DiagRow::sigma3));
  c["sigma4_max_rel_drift"] = nullable(max_rel_drift(r.diag, &DiagRow::sigma4));
  double worst = kNaN;
  for (const auto& d : r.diag)
    if (std::isfinite(d.constraint_residual))
      worst = std::isfinite(worst) ? std::max(worst, std::abs(d.constraint_residual)) : std::abs(d.constraint_residual);
  c["constraint_residual_max"] = nullable(worst);
  return c;
}

struct Aligned {
  std::vector<double> times;
  std::vector<std::string> labels;
  std::vector<std::pair<int, int>> keys;         // (n, k) rows per time
  std::vector<std::vector<double>> values;       // [treatment][time * keys + key]
  std::vector<std::vector<double>> errors;       // ensemble standard errors, NaN otherwise
};

Aligned align(const Scenario& s, const std::vector<Result>& results) {
  Aligned a;
  double spacing = 0.0, t_end = 0.0;
  std::vector<const Result*> used;
  for (const auto& r : results)
    if (!r.moments.empty()) {
      used.push_back(&r);
      spacing = std::max(spacing, r.interval);
      t_end = std::max(t_end, r.times.back());
    }
  if (used.empty()) return a;
  for (long long i = 0;; ++i) {
    const double t = static_cast<double>(i) * spacing;
    if (t > t_end * (1.0 + 1e-12) + 1e-12) break;
    a.times.push_back(t);
  }
  for (int order = 1; order <= s.moment_order; ++order)
    for (int k = 0; k <= order; ++k) a.keys.push_back({order - k, k});
  for (const Result* r : used) {
    a.labels.push_back(r->spec->label);
    std::vector<double> vals, errs;
    for (const double t : a.times)
      for (const auto& [n, k] : a.keys) {
        std::vector<double> col, ecol;
        const bool have = n + k <= r->moments.front().order();
        for (std::size_t i = 0; i < r->times.size(); ++i) {
          col.push_back(have ? r->moments[i](n, k) : kNaN);
          if (!r->standard_errors.empty()) ecol.push_back(have ? r->standard_errors[i](n, k) : kNaN);
        }
        vals.push_back(resample(r->times, col, t));
        errs.push_back(ecol.empty() ? kNaN : resample(r->times, ecol, t));
      }
    a.values.push_back(std::move(vals));
    a.errors.push_back(std::move(errs));
  }
  return a;
}

void write_compare(const std::filesystem::path& path, const Aligned& a) {
  std::ofstream out(path);
  out << "t,n,k";
  for (const auto& l : a.labels) out << ',' << l;
  out << '\n';
  for (std::size_t ti = 0; ti < a.times.size(); ++ti)
    for (std::size_t ki = 0; ki < a.keys.size(); ++ki) {
      out << io::format_double(a.times[ti]) << ',' << a.keys[ki].first << ',' << a.keys[ki].second;
      for (const auto& col : a.values) {
        const double v = col[ti * a.keys.size() + ki];
        out << ',' << (std::isfinite(v) ? io::format_double(v) : std::string());
      }
      out << '\n';
    }
}

json pairwise(const Aligned& a) {
  json list = json::array();
  for (std::size_t i = 0; i < a.labels.size(); ++i)
    for (std::size_t j = i + 1; j < a.labels.size(); ++j) {
      double worst = -1.0, worst_z = kNaN, at_t = kNaN;
      int at_n = 0, at_k = 0;
      for (std::size_t ti = 0; ti < a.times.size(); ++ti)
        for (std::size_t ki = 0; ki < a.keys.size(); ++ki) {
          const std::size_t idx = ti * a.keys.size() + ki;
          const double u = a.values[i][idx], v = a.values[j][idx];
          if (!std::isfinite(u) || !std::isfinite(v)) continue;
          const double dev = std::abs(u - v);
          if (dev > worst) {
            worst = dev;
            at_t = a.times[ti];
            at_n = a.keys[ki].first;
            at_k = a.keys[ki].second;
          }
          const double e1 = a.errors[i][idx], e2 = a.errors[j][idx];
          const double se = std::sqrt((std::isfinite(e1) ? e1 * e1 : 0.0) + (std::isfinite(e2) ? e2 * e2 : 0.0));
          if (se > 0.0) worst_z = std::isfinite(worst_z) ? std::max(worst_z, dev / se) : dev / se;
        }
      if (worst < 0.0) continue;
      list.push_back({{"a", a.labels[i]},
                      {"b", a.labels[j]},
                      {"max_abs", worst},
                      {"t", at_t},
                      {"n", at_n},
                      {"k", at_k},
                      {"max_z", nullable(worst_z)}});
    }
  return list;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

double resample(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (times.empty()) return kNaN;
  const double tol = 1e-9 * std::max(1.0, std::abs(times.back()));
  if (t < times.front() - tol || t > times.back() + tol) return kNaN;
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  const auto i = static_cast<std::size_t>(it - times.begin());
  if (i < times.size() && std::abs(times[i] - t) <= tol) return values[i];
  if (i == 0 || i >= times.size()) return kNaN;
  const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return (1.0 - w) * values[i - 1] + w * values[i];
}

RunOutcome run(const Scenario& s, std::string_view config_text) {
  validate(s);
  RunOutcome outcome;
  outcome.directory = s.output;
  std::error_code ec;
  std::filesystem::create_directories(s.output, ec);
  if (ec || !std::filesystem::is_directory(s.output))
    throw ConfigError("output", "cannot create output directory " + s.output.string());
  {
    std::ofstream probe(s.output / "scenario.yaml");
    if (!probe) throw ConfigError("output", "output directory is not writable: " + s.output.string());
    probe << config_text;
  }

  std::vector<Result> results(s.treatments.size());
  json treatments = json::object();
  for (std::size_t i = 0; i < s.treatments.size(); ++i) {
    const Treatment& t = s.treatments[i];
    Result& r = results[i];
    r.spec = &t;
    say("[" + s.name + "] " + t.label + " (" + std::string(to_string(t.kind)) + ")");
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (t.kind) {
        case TreatmentKind::ensemble:
          run_ensemble(s, t, r);
          break;
        case TreatmentKind::schrodinger:
          run_schrodinger(s, t, r);
          break;
        case TreatmentKind::liouville:
          run_liouville(s, t, r);
          break;
        case TreatmentKind::hierarchy:
          run_hierarchy(s, t, r);
          break;
        case TreatmentKind::tdvp:
        case TreatmentKind::tga:
        case TreatmentKind::heller:
          run_gaussian(s, t, r);
          break;
        case TreatmentKind::mtga:
          run_mtga(s, t, r);
          break;
        case TreatmentKind::lyapunov:
          run_lyapunov(s, t, r);
          break;
      }
    } catch (const std::exception& e) {
      fail(r, r.times.empty() ? std::optional<double>{} : std::optional<double>{r.times.back()}, e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(s.output, s, r);

    json entry = {{"kind", to_string(t.kind)}, {"status", r.failed ? "failed" : "ok"}};
    if (t.kind != TreatmentKind::lyapunov) {
      entry["conservation"] = conservation(r);
      entry["output_interval"] = r.interval;
      entry["samples"] = r.times.size();
      if (!r.times.empty()) entry["t_final"] = r.times.back();
    }
    if (r.failed) {
      entry["failure_time"] = r.failure_time ? json(*r.failure_time) : json(nullptr);
      entry["failure_reason"] = r.failure_reason;
      outcome.any_failure = true;
      outcome.failures.push_back(t.label + ": " + r.failure_reason);
      say("  failed: " + r.failure_reason);
    }
    for (auto& [k, v] : r.extra.items())
      if (k != "reports") entry[k] = v;
    entry["wall_seconds"] = seconds;
    treatments[t.label] = entry;
  }

  json summary;
  summary["scenario"] = s.name;
  summary["metadata"] = {{"timestamp", utc_timestamp()},
                         {"threads", 1},
                         {"fft_planner", "FFTW_ESTIMATE"},
                         {"seed", s.seed},
                         {"hbar", s.hbar},
                         {"dynamical_time", s.dynamical_time},
                         {"dt", s.dt},
                         {"t_final", s.t_final},
                         {"output_interval", s.output_interval}};
  // wall times vary run to run, so they live under metadata only
  json timing = json::object();
  for (auto& [label, entry] : treatments.items()) {
    timing[label] = entry["wall_seconds"];
    entry.erase("wall_seconds");
  }
  summary["metadata"]["wall_seconds"] = timing;
  summary["treatments"] = treatments;

  const Aligned aligned = align(s, results);
  if (!aligned.labels.empty()) write_compare(s.output / "compare.csv", aligned);
  summary["compare_spacing"] = aligned.times.size() > 1 ? json(aligned.times[1]) : json(nullptr);
  summary["max_pairwise_deviation"] = pairwise(aligned);

  json lyap = json::array();
  for (const auto& r : results)
    if (r.spec->kind == TreatmentKind::lyapunov && r.extra.contains("reports"))
      for (auto rep : r.extra["reports"]) {
        rep["treatment"] = r.spec->label;
        rep.erase("block_estimates");
        lyap.push_back(rep);
      }
  summary["lyapunov"] = lyap;

  summary["eq15_residual"] = nullptr;
  for (const auto& t : s.treatments)
    if (t.kind == TreatmentKind::schrodinger && t.cat_separation == 0.0) {
      try {
        const json check = p3_rate_check(s, t, results);
        summary["eq15_residual"] = check["relative_residual"];
        summary["p3_rate_check"] = check;
      } catch (const std::exception& e) {
        summary["p3_rate_check"] = {{"error", e.what()}};
      }
      break;
    }

  json failures = json::array();
  for (const auto& r : results)
    if (r.failed)
      failures.push_back({{"treatment", r.spec->label},
                          {"time", r.failure_time ? json(*r.failure_time) : json(nullptr)},
                          {"reason", r.failure_reason}});
  summary["failures"] = failures;
  std::ofstream(s.output / "summary.json") << summary.dump(2) << '\n';
  return outcome;
}

}  // namespace phaseflow::cli
