#include "phaseflow/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phaseflow/rk4.hpp"

namespace phaseflow {

namespace {

constexpr double kPi = std::numbers::pi;

// sum_{n>=0} a^n / (2^n n!) V^{(2n + offset)}(x)
double even_series(const PolynomialPotential& pot, int offset, double a, double x, double t) {
  double acc = 0.0;
  double c = 1.0;
  for (int n = 0; 2 * n + offset <= pot.degree(); ++n) {
    acc += c * pot.derivative(2 * n + offset, x, t);
    c *= a / (2.0 * (n + 1));
  }
  return acc;
}

bool finite_state(const GaussianState& g) {
  return std::isfinite(g.mean_x) && std::isfinite(g.mean_p) && std::isfinite(g.cxx) && std::isfinite(g.cxp) &&
         std::isfinite(g.cpp);
}

}  // namespace

TdvpState TdvpState::pure(const GaussianState& g, double hbar) {
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  g.validate();
  if (!g.is_pure(hbar, 1e-10)) throw std::invalid_argument("state violates the purity constraint det C = hbar^2/4");
  return {g, 1.0 / (2.0 * kPi * hbar)};
}

TdvpState TdvpState::from_covariances(const GaussianState& g) {
  g.validate();
  return {g, sigma2_of_gaussian(g)};
}

double TdvpState::constraint_target() const {
  const double k = 1.0 / (4.0 * kPi * sigma2);
  return k * k;
}

double TdvpState::constraint_residual() const {
  const double target = constraint_target();
  return (g.det() - target) / target;
}

ReducedState to_reduced(const GaussianState& g) {
  if (!(g.cxx > 0.0)) throw std::invalid_argument("reduced chart needs cxx > 0");
  const double rho = std::sqrt(g.cxx);
  return {g.mean_x, g.mean_p, rho, g.cxp / rho};
}

GaussianState from_reduced(const ReducedState& r, double sigma2) {
  const double k = 1.0 / (4.0 * kPi * sigma2);
  return {r.xbar, r.pbar, r.rho * r.rho, r.rho * r.gamma, r.gamma * r.gamma + k * k / (r.rho * r.rho)};
}

GaussianState tdvp_rhs(const GaussianState& s, const PolynomialPotential& pot, double t) {
  const double m = pot.mass();
  const double even = even_series(pot, 2, s.cxx, s.mean_x, t);
  return {s.mean_p / m, -even_series(pot, 1, s.cxx, s.mean_x, t), 2.0 * s.cxp / m, s.cpp / m - s.cxx * even,
          -2.0 * s.cxp * even};
}

GaussianState heller_rhs(const GaussianState& s, const PolynomialPotential& pot, double t) {
  const double m = pot.mass();
  const double v2 = pot.derivative(2, s.mean_x, t);
  return {s.mean_p / m, -pot.derivative(1, s.mean_x, t), 2.0 * s.cxp / m, s.cpp / m - s.cxx * v2, -2.0 * s.cxp * v2};
}

GaussianState consistent_tga_rhs(const GaussianState& s, const PolynomialPotential& pot, double t) {
  GaussianState r = heller_rhs(s, pot, t);
  r.mean_p -= 0.5 * s.cxx * pot.derivative(3, s.mean_x, t);
  return r;
}

double tdvp_energy(const GaussianState& s, const PolynomialPotential& pot, double t) {
  return (s.mean_p * s.mean_p + s.cpp) / (2.0 * pot.mass()) + even_series(pot, 0, s.cxx, s.mean_x, t);
}

double tga_energy(const GaussianState& s, const PolynomialPotential& pot, double t) {
  return (s.mean_p * s.mean_p + s.cpp) / (2.0 * pot.mass()) + pot.evaluate(s.mean_x, t) +
         0.5 * s.cxx * pot.derivative(2, s.mean_x, t);
}

double hg_energy(const ReducedState& r, double sigma2, const PolynomialPotential& pot, double t) {
  const double m = pot.mass();
  const double k = 1.0 / (4.0 * kPi * sigma2);
  return (r.pbar * r.pbar + r.gamma * r.gamma) / (2.0 * m) + k * k / (2.0 * m * r.rho * r.rho) +
         even_series(pot, 0, r.rho * r.rho, r.xbar, t);
}

double heller_energy_drift(const GaussianState& s, const PolynomialPotential& pot, double t) {
  return s.mean_p / (2.0 * pot.mass()) * pot.derivative(3, s.mean_x, t) * s.cxx;
}

double heller_energy_rate_fd(const GaussianState& g, const PolynomialPotential& pot, double h, double t) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  auto rhs = [&](double time, const std::array<double, 5>& y) {
    return to_array(heller_rhs(from_array(y), pot, time));
  };
  auto energy_after = [&](double step, int count) {
    std::array<double, 5> y = to_array(g);
    for (int i = 0; i < count; ++i) y = rk4_step(rhs, t + i * step, y, step);
    return tga_energy(from_array(y), pot, t + count * step);
  };
  return (energy_after(-h, 2) - 8.0 * energy_after(-h, 1) + 8.0 * energy_after(h, 1) - energy_after(h, 2)) /
         (12.0 * h);
}

double dynamical_time(const GaussianState& g, const PolynomialPotential& pot) {
  const double curvature = std::abs(even_series(pot, 2, g.cxx, g.mean_x, 0.0));
  if (curvature > 1e-12) return 2.0 * kPi / std::sqrt(curvature / pot.mass());
  // no restoring force: time for a free packet to double its position variance
  if (g.cpp > 0.0 && g.cxx > 0.0) return pot.mass() * std::sqrt(g.cxx / g.cpp);
  return 1.0;
}

double fluct_hamiltonian(double rho, double gamma, double xbar, double sigma2, const PolynomialPotential& pot,
                         double t, bool drop_constraint) {
  if (!(rho > 0.0)) throw std::invalid_argument("fluctuation Hamiltonian needs rho > 0");
  const double m = pot.mass();
  double h = gamma * gamma / (2.0 * m) + 0.5 * pot.derivative(2, xbar, t) * rho * rho;
  if (!drop_constraint) {
    const double k = 1.0 / (4.0 * kPi * sigma2);
    h += k * k / (2.0 * m * rho * rho);
  }
  return h;
}

std::string_view to_string(GaussianRule r) {
  switch (r) {
    case GaussianRule::tdvp:
      return "tdvp";
    case GaussianRule::heller:
      return "heller";
    case GaussianRule::consistent_tga:
      return "tga";
  }
  return "unknown";
}

GaussianState gaussian_rhs(GaussianRule rule, const GaussianState& s, const PolynomialPotential& pot, double t) {
  switch (rule) {
    case GaussianRule::tdvp:
      return tdvp_rhs(s, pot, t);
    case GaussianRule::heller:
      return heller_rhs(s, pot, t);
    case GaussianRule::consistent_tga:
      return consistent_tga_rhs(s, pot, t);
  }
  throw std::invalid_argument("unknown Gaussian rule");
}

double rule_energy(GaussianRule rule, const GaussianState& s, const PolynomialPotential& pot, double t) {
  return rule == GaussianRule::consistent_tga ? tga_energy(s, pot, t) : tdvp_energy(s, pot, t);
}

GaussianRun propagate_gaussian(const TdvpState& s0, const PolynomialPotential& pot, GaussianRule rule, double dt,
                               double t_final, int stride, double t0) {
  if (!(dt > 0.0) || stride < 1) throw std::invalid_argument("Gaussian propagation needs dt > 0 and stride >= 1");
  GaussianRun run;
  auto record = [&](double t, const GaussianState& g) {
    run.times.push_back(t);
    run.states.push_back(g);
    run.energy.push_back(rule_energy(rule, g, pot, t));
    run.constraint_residual.push_back(TdvpState{g, s0.sigma2}.constraint_residual());
  };
  auto rhs = [&](double t, const std::array<double, 5>& y) { return to_array(gaussian_rhs(rule, from_array(y), pot, t)); };

  std::array<double, 5> y = to_array(s0.g);
  record(t0, s0.g);
  const auto steps = static_cast<long long>(std::llround((t_final - t0) / dt));
  for (long long i = 1; i <= steps; ++i) {
    y = rk4_step(rhs, t0 + static_cast<double>(i - 1) * dt, y, dt);
    const GaussianState g = from_array(y);
    if (!finite_state(g) || !(g.cxx > 0.0)) {
      run.failure_time = t0 + static_cast<double>(i) * dt;
      run.failure_reason = finite_state(g) ? "position variance became non-positive" : "non-finite state";
      break;
    }
    if (i % stride == 0 || i == steps) record(t0 + static_cast<double>(i) * dt, g);
  }
  return run;
}

GaussianRun propagate_reduced(const TdvpState& s0, const PolynomialPotential& pot, double dt, double t_final,
                              int stride, double t0) {
  if (!(dt > 0.0) || stride < 1) throw std::invalid_argument("Gaussian propagation needs dt > 0 and stride >= 1");
  const double k = s0.constraint_target();
  GaussianRun run;
  auto record = [&](double t, const std::array<double, 4>& y) {
    const GaussianState g = from_reduced({y[0], y[1], y[2], y[3]}, s0.sigma2);
    run.times.push_back(t);
    run.states.push_back(g);
    run.energy.push_back(hg_energy({y[0], y[1], y[2], y[3]}, s0.sigma2, pot, t));
    run.constraint_residual.push_back(TdvpState{g, s0.sigma2}.constraint_residual());
  };
  auto rhs = [&](double t, const std::array<double, 4>& y) { return reduced_rhs(y, k, pot, t); };

  const ReducedState r0 = to_reduced(s0.g);
  std::array<double, 4> y = {r0.xbar, r0.pbar, r0.rho, r0.gamma};
  record(t0, y);
  const auto steps = static_cast<long long>(std::llround((t_final - t0) / dt));
  for (long long i = 1; i <= steps; ++i) {
    y = rk4_step(rhs, t0 + static_cast<double>(i - 1) * dt, y, dt);
    if (!(std::isfinite(y[0]) && std::isfinite(y[1]) && std::isfinite(y[2]) && std::isfinite(y[3])) || !(y[2] > 0.0)) {
      run.failure_time = t0 + static_cast<double>(i) * dt;
      run.failure_reason = "reduced chart left rho > 0";
      break;
    }
    if (i % stride == 0 || i == steps) record(t0 + static_cast<double>(i) * dt, y);
  }
  return run;
}

void GaussianSum::validate() const {
  if (weights.empty() || weights.size() != packets.size())
    throw std::invalid_argument("Gaussian sum needs one weight per packet and at least one packet");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("packet weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("packet weights must sum to 1");
  for (const auto& g : packets) g.validate();
}

GaussianSum GaussianSum::single(const GaussianState& g) { return {{1.0}, {g}}; }

GaussianSum GaussianSum::auto_tile(const GaussianState& parent, int count, double r) {
  parent.validate();
  if (count < 3) throw std::invalid_argument("auto tiling needs at least 3 packets");
  if (!(r > 0.0 && r * r < 2.0)) throw std::invalid_argument("auto tiling radius must lie in (0, sqrt 2)");
  const double l11 = std::sqrt(parent.cxx);
  const double l21 = parent.cxp / l11;
  const double l22 = std::sqrt(parent.cpp - l21 * l21);
  const double shrink = 1.0 - 0.5 * r * r;
  GaussianSum gs;
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * kPi * i / count;
    const double u = r * std::cos(a);
    const double v = r * std::sin(a);
    gs.weights.push_back(1.0 / count);
    gs.packets.push_back({parent.mean_x + l11 * u, parent.mean_p + l21 * u + l22 * v, shrink * parent.cxx,
                          shrink * parent.cxp, shrink * parent.cpp});
  }
  return gs;
}

MtgaRun mtga_propagate(const GaussianSum& gs, const PolynomialPotential& pot, GaussianRule rule, double dt,
                       double t_final, int stride) {
  gs.validate();
  MtgaRun out;
  std::vector<GaussianRun> runs;
  runs.reserve(gs.packets.size());
  for (const auto& g : gs.packets) {
    runs.push_back(propagate_gaussian(TdvpState::from_covariances(g), pot, rule, dt, t_final, stride));
    if (!runs.back().ok() && (!out.failure_time || *runs.back().failure_time < *out.failure_time)) {
      out.failure_time = runs.back().failure_time;
      out.failure_reason = "packet " + std::to_string(runs.size() - 1) + ": " + runs.back().failure_reason;
    }
  }
  std::size_t n = runs.front().times.size();
  for (const auto& r : runs) n = std::min(n, r.times.size());
  for (std::size_t i = 0; i < n; ++i) {
    GaussianSum s{gs.weights, {}};
    for (const auto& r : runs) s.packets.push_back(r.states[i]);
    out.times.push_back(runs.front().times[i]);
    out.sums.push_back(std::move(s));
  }
  return out;
}

double mtga_density(const GaussianSum& gs, double x, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < gs.packets.size(); ++i) {
    const auto& g = gs.packets[i];
    const double det = g.det();
    const double dx = x - g.mean_x;
    const double dp = p - g.mean_p;
    const double q = (g.cpp * dx * dx - 2.0 * g.cxp * dx * dp + g.cxx * dp * dp) / det;
    acc += gs.weights[i] * std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(det));
  }
  return acc;
}

MomentSet mtga_moments(const GaussianSum& gs, int order, MomentFlavor flavor) {
  MomentSet out(order, flavor);
  for (auto& v : out.values()) v = 0.0;
  for (std::size_t i = 0; i < gs.packets.size(); ++i) {
    const auto& g = gs.packets[i];
    const MomentSet m = gaussian_raw_moments(g.mean_x, g.mean_p, g.covariance(), order, flavor);
    for (std::size_t j = 0; j < out.values().size(); ++j) out.values()[j] += gs.weights[i] * m.values()[j];
  }
  return out;
}

}  // namespace phaseflow
