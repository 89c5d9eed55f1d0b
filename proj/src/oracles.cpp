#include "phaseflow/oracles.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <numbers>

#include "phaseflow/fft.hpp"

namespace phaseflow {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrator dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("integrator t_final must be non-negative");
  if (stride < 1) throw std::invalid_argument("integrator stride must be at least 1");
}

long long IntegratorConfig::steps() const { return std::llround(t_final / dt); }

namespace {

bool emit(long long i, long long steps, int stride) { return i % stride == 0 || i == steps; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void leapfrog_evolve(TrajectoryEnsemble& e, const PolynomialPotential& pot, const IntegratorConfig& cfg,
                     const EnsembleObserver& observe, double escape_bound, double t0) {
  cfg.validate();
  const double m = pot.mass();
  const double dt = cfg.dt;
  const long long steps = cfg.steps();
  const auto force = pot.derivative_coefficients(1, t0);
  if (observe) observe(t0, e);
  for (long long i = 1; i <= steps; ++i) {
    const double th = t0 + (static_cast<double>(i) - 0.5) * dt;
    const auto f = pot.is_static() ? force : pot.derivative_coefficients(1, th);
    for (std::size_t j = 0; j < e.size(); ++j) {
      double x = e.x[j];
      double p = e.p[j] - 0.5 * dt * horner<double>(f, x);
      x += dt * p / m;
      p -= 0.5 * dt * horner<double>(f, x);
      if (!(std::abs(x) <= escape_bound))
        throw OracleError("particle " + std::to_string(j) + " escaped |x| <= " + num(escape_bound) +
                              " at t = " + num(t0 + static_cast<double>(i) * dt),
                          t0 + static_cast<double>(i) * dt);
      e.x[j] = x;
      e.p[j] = p;
    }
    if (observe && emit(i, steps, cfg.stride)) observe(t0 + static_cast<double>(i) * dt, e);
  }
}

std::vector<TrajectoryEnsemble> leapfrog_series(TrajectoryEnsemble e, const PolynomialPotential& pot,
                                                const IntegratorConfig& cfg, double escape_bound) {
  std::vector<TrajectoryEnsemble> out;
  leapfrog_evolve(e, pot, cfg, [&](double, const TrajectoryEnsemble& s) { out.push_back(s); }, escape_bound);
  return out;
}

void splitstep_evolve(WavefunctionGrid& w, const PolynomialPotential& pot, const IntegratorConfig& cfg,
                      const WavefunctionObserver& observe, double edge_tolerance, double t0) {
  cfg.validate();
  w.validate();
  const int n = w.x.n;
  const double dt = cfg.dt;
  const double hbar = w.hbar;
  const Fft fft(n);

  std::vector<std::complex<double>> half_kinetic(static_cast<std::size_t>(n));
  const double dp = 2.0 * std::numbers::pi * hbar / (n * w.x.step);
  for (int k = 0; k < n; ++k) {
    const double p = signed_frequency(k, n) * dp;
    half_kinetic[k] = std::polar(1.0, -p * p * dt / (4.0 * w.mass * hbar));
  }
  std::vector<std::complex<double>> potential_phase(static_cast<std::size_t>(n));
  auto fill_potential = [&](double t) {
    for (int j = 0; j < n; ++j) potential_phase[j] = std::polar(1.0, -pot.evaluate(w.x.at(j), t) * dt / hbar);
  };
  if (pot.is_static()) fill_potential(t0);

  auto check_edges = [&](double t) {
    const double pe = position_edge_ratio(w);
    const double me = momentum_edge_ratio(w);
    if (pe > edge_tolerance || me > edge_tolerance)
      throw OracleError("wavefunction reached the grid edge (position ratio " + num(pe) +
                            ", momentum ratio " + num(me) + ") at t = " + num(t),
                        t);
  };

  check_edges(t0);
  if (observe) observe(t0, w);
  const long long steps = cfg.steps();
  const double inv_n = 1.0 / n;
  for (long long i = 1; i <= steps; ++i) {
    if (!pot.is_static()) fill_potential(t0 + (static_cast<double>(i) - 0.5) * dt);
    fft.forward(w.psi);
    for (int k = 0; k < n; ++k) w.psi[k] *= half_kinetic[k];
    fft.inverse(w.psi);
    for (int j = 0; j < n; ++j) w.psi[j] *= potential_phase[j] * inv_n;
    fft.forward(w.psi);
    for (int k = 0; k < n; ++k) w.psi[k] *= half_kinetic[k] * inv_n;
    fft.inverse(w.psi);
    if (emit(i, steps, cfg.stride)) {
      const double t = t0 + static_cast<double>(i) * dt;
      check_edges(t);
      if (observe) observe(t, w);
    }
  }
}

std::vector<WavefunctionGrid> splitstep_series(WavefunctionGrid w, const PolynomialPotential& pot,
                                               const IntegratorConfig& cfg, double edge_tolerance) {
  std::vector<WavefunctionGrid> out;
  splitstep_evolve(w, pot, cfg, [&](double, const WavefunctionGrid& s) { out.push_back(s); }, edge_tolerance);
  return out;
}

double boundary_mass_fraction(const PhaseSpaceGrid& f, int band) {
  double total = 0.0;
  double edge = 0.0;
  for (int i = 0; i < f.x.n; ++i)
    for (int j = 0; j < f.p.n; ++j) {
      const double v = std::abs(f.at(i, j));
      total += v;
      if (i < band || i >= f.x.n - band || j < band || j >= f.p.n - band) edge += v;
    }
  return total > 0.0 ? edge / total : 0.0;
}

double relative_l2(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
  if (a.f.size() != b.f.size()) throw std::invalid_argument("relative_l2 needs grids of equal shape");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.f.size(); ++i) {
    num += (a.f[i] - b.f[i]) * (a.f[i] - b.f[i]);
    den += b.f[i] * b.f[i];
  }
  return std::sqrt(num / den);
}

namespace {

// Tensor cubic Lagrange stencil: base indices of the 4x4 block and per-axis weights.
struct Stencil {
  int ix = 0;
  int ip = 0;
  std::array<double, 4> wx{};
  std::array<double, 4> wp{};
};

void lagrange_weights(double u, std::array<double, 4>& w) {
  w[0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
  w[1] = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
  w[2] = -(u + 1.0) * u * (u - 2.0) / 2.0;
  w[3] = (u + 1.0) * u * (u - 1.0) / 6.0;
}

// Departure point of the node (x, p) at time t_end, traced back over dt.
Stencil departure(double x, double p, double t_end, double dt, int substeps, const PolynomialPotential& pot,
                  const GridAxis& ax, const GridAxis& ap) {
  const double m = pot.mass();
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    const double tm = t_end - (s + 0.5) * h;
    p += 0.5 * h * pot.derivative(1, x, tm);
    x -= h * p / m;
    p += 0.5 * h * pot.derivative(1, x, tm);
  }
  Stencil st;
  const double sx = (x - ax.min) / ax.step;
  const double sp = (p - ap.min) / ap.step;
  const double fx = std::floor(sx);
  const double fp = std::floor(sp);
  // anything farther than the stencil reach reads only zeros
  if (!(fx >= -3.0 && fx <= ax.n + 1.0 && fp >= -3.0 && fp <= ap.n + 1.0)) {
    st.ix = -100;
    st.ip = -100;
    return st;
  }
  st.ix = static_cast<int>(fx) - 1;
  st.ip = static_cast<int>(fp) - 1;
  lagrange_weights(sx - fx, st.wx);
  lagrange_weights(sp - fp, st.wp);
  return st;
}

double apply(const Stencil& st, const PhaseSpaceGrid& f) {
  if (st.ix == -100) return 0.0;
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    const int i = st.ix + a;
    if (i < 0 || i >= f.x.n) continue;
    const double* row = &f.f[static_cast<std::size_t>(i) * f.p.n];
    double r = 0.0;
    for (int b = 0; b < 4; ++b) {
      const int j = st.ip + b;
      if (j >= 0 && j < f.p.n) r += st.wp[b] * row[j];
    }
    acc += st.wx[a] * r;
  }
  return acc;
}

}  // namespace

void liouville_evolve(PhaseSpaceGrid& f, const PolynomialPotential& pot, const IntegratorConfig& cfg,
                      const PhaseGridObserver& observe, const LiouvilleOptions& opts, double t0) {
  cfg.validate();
  if (opts.substeps < 1) throw std::invalid_argument("liouville substeps must be at least 1");
  if (f.x.n < 4 || f.p.n < 4 || f.f.size() != static_cast<std::size_t>(f.x.n) * f.p.n)
    throw std::invalid_argument("liouville grid must be at least 4x4 and match its axes");
  const double dt = cfg.dt;
  const std::size_t nodes = f.f.size();

  std::vector<Stencil> stencils(nodes);
  auto build = [&](double t_end) {
    for (int i = 0; i < f.x.n; ++i)
      for (int j = 0; j < f.p.n; ++j)
        stencils[static_cast<std::size_t>(i) * f.p.n + j] =
            departure(f.x.at(i), f.p.at(j), t_end, dt, opts.substeps, pot, f.x, f.p);
  };
  if (pot.is_static()) build(t0 + dt);

  auto check_boundary = [&](double t) {
    const double b = boundary_mass_fraction(f, opts.boundary_band);
    if (b > opts.boundary_tolerance)
      throw OracleError("phase-space density reached the grid boundary (mass fraction " + num(b) +
                            ") at t = " + num(t),
                        t);
  };

  check_boundary(t0);
  if (observe) observe(t0, f);
  std::vector<double> next(nodes);
  const long long steps = cfg.steps();
  for (long long s = 1; s <= steps; ++s) {
    const double t = t0 + static_cast<double>(s) * dt;
    if (!pot.is_static()) build(t);
    for (std::size_t k = 0; k < nodes; ++k) next[k] = apply(stencils[k], f);
    f.f.swap(next);
    if (emit(s, steps, cfg.stride)) {
      check_boundary(t);
      if (observe) observe(t, f);
    }
  }
}

std::vector<PhaseSpaceGrid> liouville_series(PhaseSpaceGrid f, const PolynomialPotential& pot,
                                             const IntegratorConfig& cfg, const LiouvilleOptions& opts) {
  std::vector<PhaseSpaceGrid> out;
  liouville_evolve(f, pot, cfg, [&](double, const PhaseSpaceGrid& s) { out.push_back(s); }, opts);
  return out;
}

}  // namespace phaseflow
