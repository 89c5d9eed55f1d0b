#include "phaseflow/states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "phaseflow/fft.hpp"
#include "phaseflow/rng.hpp"

namespace phaseflow {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_order(int order) {
  if (order < 0 || order > kMaxMeasuredOrder)
    throw std::invalid_argument("moment order " + std::to_string(order) + " outside [0, " +
                                std::to_string(kMaxMeasuredOrder) + "]");
}

void fill_powers(double v, int order, double* out) {
  out[0] = 1.0;
  for (int j = 1; j <= order; ++j) out[j] = out[j - 1] * v;
}

}  // namespace

void GaussianState::validate() const {
  if (!std::isfinite(mean_x) || !std::isfinite(mean_p)) throw std::invalid_argument("means must be finite");
  if (!(cxx > 0.0)) throw std::invalid_argument("cxx must be positive");
  if (!(cpp > 0.0)) throw std::invalid_argument("cpp must be positive");
  if (!(det() > 0.0)) throw std::invalid_argument("covariance determinant must be positive");
}

bool GaussianState::is_pure(double hbar, double rel_tol) const {
  const double target = 0.25 * hbar * hbar;
  return std::abs(det() - target) <= rel_tol * target;
}

GaussianState GaussianState::pure(double mean_x, double mean_p, double cxx, double cxp, double hbar) {
  if (!(cxx > 0.0)) throw std::invalid_argument("cxx must be positive");
  return {mean_x, mean_p, cxx, cxp, (0.25 * hbar * hbar + cxp * cxp) / cxx};
}

GaussianState GaussianState::coherent(double mean_x, double mean_p, double hbar, double mass, double omega) {
  return {mean_x, mean_p, hbar / (2.0 * mass * omega), 0.0, 0.5 * hbar * mass * omega};
}

double sigma2_of_gaussian(const GaussianState& g) {
  const double d = g.det();
  if (!(d > 0.0)) throw std::invalid_argument("covariance determinant must be positive");
  return 1.0 / (4.0 * kPi * std::sqrt(d));
}

TrajectoryEnsemble sample_ensemble(const GaussianState& g, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ensemble size must be at least 1");
  g.validate();
  const double l11 = std::sqrt(g.cxx);
  const double l21 = g.cxp / l11;
  const double l22 = std::sqrt(g.cpp - l21 * l21);
  const CounterRng rng(seed);
  TrajectoryEnsemble e;
  e.x.resize(n);
  e.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [z1, z2] = rng.normal_pair(i);
    e.x[i] = g.mean_x + l11 * z1;
    e.p[i] = g.mean_p + l21 * z1 + l22 * z2;
  }
  return e;
}

GridAxis GridAxis::centered(int n, double half_width, double center) {
  if (n < 2 || !(half_width > 0.0)) throw std::invalid_argument("grid axis needs n >= 2 and positive width");
  return {n, center - half_width, 2.0 * half_width / n};
}

double WavefunctionGrid::norm() const {
  double s = 0.0;
  for (const auto& a : psi) s += std::norm(a);
  return s * x.step;
}

void WavefunctionGrid::normalize() {
  const double s = std::sqrt(norm());
  if (!(s > 0.0)) throw std::invalid_argument("cannot normalize a zero wavefunction");
  for (auto& a : psi) a /= s;
}

void WavefunctionGrid::validate() const {
  if (!is_power_of_two(x.n) || x.n < 64)
    throw std::invalid_argument("wavefunction grid size must be a power of two >= 64");
  if (static_cast<int>(psi.size()) != x.n) throw std::invalid_argument("wavefunction size does not match grid");
  if (std::abs(norm() - 1.0) > 1e-8) throw std::invalid_argument("wavefunction is not normalized");
}

GridAxis WavefunctionGrid::momentum_axis() const {
  const double dp = 2.0 * kPi * hbar / (x.n * x.step);
  return {x.n, -(x.n / 2) * dp, dp};
}

WavefunctionGrid wavefunction_from_gaussian(const GaussianState& g, const GridAxis& x, double hbar, double mass) {
  g.validate();
  if (!g.is_pure(hbar)) throw std::invalid_argument("wavefunction_from_gaussian requires a pure state (det C = hbar^2/4)");
  // psi ~ exp(-(ar + i ai) d^2 + i pbar d / hbar) has <d^2> = 1/(4 ar) and <d e> = -2 hbar ai <d^2>.
  const double ar = 1.0 / (4.0 * g.cxx);
  const double ai = -g.cxp / (2.0 * hbar * g.cxx);
  WavefunctionGrid w{x, std::vector<std::complex<double>>(static_cast<std::size_t>(x.n)), hbar, mass};
  for (int j = 0; j < x.n; ++j) {
    const double d = x.at(j) - g.mean_x;
    const double phase = -ai * d * d + g.mean_p * d / hbar;
    w.psi[j] = std::exp(-ar * d * d) * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  w.normalize();
  w.validate();
  const double edge = std::max(std::abs(w.psi.front()), std::abs(w.psi.back()));
  if (edge >= 1e-12)
    throw GridError("grid clips the Gaussian: edge amplitude " + std::to_string(edge) + " >= 1e-12");
  return w;
}

WavefunctionGrid superpose(const WavefunctionGrid& first, const WavefunctionGrid& second,
                           std::complex<double> a, std::complex<double> b) {
  if (first.x.n != second.x.n || first.x.min != second.x.min || first.x.step != second.x.step)
    throw std::invalid_argument("superposed wavefunctions must share a grid");
  WavefunctionGrid out = first;
  for (std::size_t j = 0; j < out.psi.size(); ++j) out.psi[j] = a * first.psi[j] + b * second.psi[j];
  out.normalize();
  return out;
}

std::vector<double> momentum_density(const WavefunctionGrid& w) {
  const int n = w.x.n;
  std::vector<std::complex<double>> phi(w.psi);
  Fft(n).forward(phi);
  const double scale = w.x.step * w.x.step / (2.0 * kPi * w.hbar);
  std::vector<double> rho(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) rho[signed_frequency(k, n) + n / 2] = std::norm(phi[k]) * scale;
  return rho;
}

double PhaseSpaceGrid::integral() const {
  double s = 0.0;
  for (double v : f) s += v;
  return s * cell();
}

PhaseSpaceGrid phase_grid_from_gaussian(const GaussianState& g, const GridAxis& x, const GridAxis& p) {
  g.validate();
  const double det = g.det();
  const double ixx = g.cpp / det;
  const double ipp = g.cxx / det;
  const double ixp = -g.cxp / det;
  const double norm = 1.0 / (2.0 * kPi * std::sqrt(det));
  PhaseSpaceGrid out{x, p, std::vector<double>(static_cast<std::size_t>(x.n) * p.n)};
  for (int i = 0; i < x.n; ++i) {
    const double dx = x.at(i) - g.mean_x;
    for (int j = 0; j < p.n; ++j) {
      const double dp = p.at(j) - g.mean_p;
      out.at(i, j) = norm * std::exp(-0.5 * (ixx * dx * dx + 2.0 * ixp * dx * dp + ipp * dp * dp));
    }
  }
  return out;
}

WignerGrid wigner_transform(const WavefunctionGrid& w) {
  w.validate();
  const int n = w.x.n;
  const int n2 = 2 * n;

  // Band-limited interpolation onto the half-step grid by zero padding the spectrum.
  std::vector<std::complex<double>> spec(w.psi);
  Fft(n).forward(spec);
  std::vector<std::complex<double>> fine(static_cast<std::size_t>(n2), 0.0);
  for (int k = 0; k < n; ++k) {
    const int s = signed_frequency(k, n);
    if (s == -n / 2) {
      fine[n / 2] += 0.5 * spec[k];
      fine[n2 - n / 2] += 0.5 * spec[k];
    } else {
      fine[s >= 0 ? s : n2 + s] = spec[k];
    }
  }
  Fft(n2).inverse(fine);
  for (auto& v : fine) v /= static_cast<double>(n);

  WignerGrid out;
  out.x = w.x;
  out.p = w.momentum_axis();
  out.hbar = w.hbar;
  out.f.assign(static_cast<std::size_t>(n) * n, 0.0);

  const Fft row_fft(n);
  std::vector<std::complex<double>> row(static_cast<std::size_t>(n));
  const double scale = w.x.step / (2.0 * kPi * w.hbar);
  for (int i = 0; i < n; ++i) {
    // rho(x_i, j dx) = psi(x_i + j dx / 2) psi*(x_i - j dx / 2)
    for (int j = -n / 2; j < n / 2; ++j) {
      const int a = 2 * i + j;
      const int b = 2 * i - j;
      std::complex<double> v = 0.0;
      if (a >= 0 && a < n2 && b >= 0 && b < n2) v = fine[a] * std::conj(fine[b]);
      row[j >= 0 ? j : n + j] = v;
    }
    row_fft.forward(row);
    for (int k = 0; k < n; ++k) out.at(i, signed_frequency(k, n) + n / 2) = scale * row[k].real();
  }
  return out;
}

double sigma_n(const PhaseSpaceGrid& grid, int n) {
  if (n < 1) throw std::invalid_argument("sigma_n requires n >= 1");
  double s = 0.0;
  for (double v : grid.f) s += std::pow(v, n);
  return s * grid.cell();
}

MomentSet moments_from_grid(const PhaseSpaceGrid& grid, int order, MomentFlavor flavor) {
  check_order(order);
  MomentSet out(order, flavor);
  std::vector<double> acc(MomentSet::size_for(order), 0.0);
  std::vector<double> xp(order + 1), pp(order + 1);
  double mass = 0.0;
  for (int i = 0; i < grid.x.n; ++i) {
    fill_powers(grid.x.at(i), order, xp.data());
    for (int j = 0; j < grid.p.n; ++j) {
      const double f = grid.at(i, j);
      if (f == 0.0) continue;
      fill_powers(grid.p.at(j), order, pp.data());
      mass += f;
      for (int s = 1; s <= order; ++s)
        for (int k = 0; k <= s; ++k) acc[MomentSet::index(s - k, k)] += f * xp[s - k] * pp[k];
    }
  }
  if (mass == 0.0) throw std::invalid_argument("phase-space grid has zero mass");
  for (std::size_t m = 1; m < acc.size(); ++m) out.values()[m] = acc[m] / mass;
  return out;
}

MomentSet moments_from_wigner(const WignerGrid& grid, int order) {
  return moments_from_grid(grid, order, MomentFlavor::quantum_weyl);
}

double position_edge_ratio(const WavefunctionGrid& w, int band) {
  double peak = 0.0;
  for (const auto& a : w.psi) peak = std::max(peak, std::norm(a));
  double edge = 0.0;
  const int n = static_cast<int>(w.psi.size());
  for (int j = 0; j < band; ++j) edge = std::max({edge, std::norm(w.psi[j]), std::norm(w.psi[n - 1 - j])});
  return peak > 0.0 ? edge / peak : 0.0;
}

double momentum_edge_ratio(const WavefunctionGrid& w, int band) {
  const auto rho = momentum_density(w);
  const double peak = *std::max_element(rho.begin(), rho.end());
  double edge = 0.0;
  const int n = static_cast<int>(rho.size());
  for (int j = 0; j < band; ++j) edge = std::max({edge, rho[j], rho[n - 1 - j]});
  return peak > 0.0 ? edge / peak : 0.0;
}

MomentSet moments_from_wavefunction(const WavefunctionGrid& w, int order) {
  return moments_from_wavefunction(w, wigner_transform(w), order);
}

MomentSet moments_from_wavefunction(const WavefunctionGrid& w, const WignerGrid& wigner, int order) {
  check_order(order);
  w.validate();
  const double alias = momentum_edge_ratio(w);
  if (alias > 1e-10)
    throw GridError("momentum density at the grid edge is " + std::to_string(alias) +
                    " of its maximum (> 1e-10); refine dx");

  MomentSet out = order >= 2 ? moments_from_wigner(wigner, order) : MomentSet(order, MomentFlavor::quantum_weyl);
  out.set_flavor(MomentFlavor::quantum_weyl);

  std::vector<double> pw(order + 1);
  std::vector<double> xs(order + 1, 0.0);
  for (int j = 0; j < w.x.n; ++j) {
    fill_powers(w.x.at(j), order, pw.data());
    const double d = std::norm(w.psi[j]) * w.x.step;
    for (int s = 1; s <= order; ++s) xs[s] += d * pw[s];
  }
  const auto rho = momentum_density(w);
  const GridAxis pa = w.momentum_axis();
  std::vector<double> ps(order + 1, 0.0);
  for (int k = 0; k < pa.n; ++k) {
    fill_powers(pa.at(k), order, pw.data());
    const double d = rho[k] * pa.step;
    for (int s = 1; s <= order; ++s) ps[s] += d * pw[s];
  }
  for (int s = 1; s <= order; ++s) {
    out(s, 0) = xs[s];
    out(0, s) = ps[s];
  }
  return out;
}

MomentSet moments_from_ensemble(const TrajectoryEnsemble& e, int order) {
  check_order(order);
  if (e.size() == 0) throw std::invalid_argument("empty ensemble");
  MomentSet out(order, MomentFlavor::classical);
  std::vector<double> acc(MomentSet::size_for(order), 0.0);
  std::vector<double> xp(order + 1), pp(order + 1);
  for (std::size_t i = 0; i < e.size(); ++i) {
    fill_powers(e.x[i], order, xp.data());
    fill_powers(e.p[i], order, pp.data());
    for (int s = 1; s <= order; ++s)
      for (int k = 0; k <= s; ++k) acc[MomentSet::index(s - k, k)] += xp[s - k] * pp[k];
  }
  const double inv = 1.0 / static_cast<double>(e.size());
  for (std::size_t m = 1; m < acc.size(); ++m) out.values()[m] = acc[m] * inv;
  return out;
}

MomentSet moment_standard_errors(const TrajectoryEnsemble& e, int order) {
  check_order(order);
  const int hi = 2 * order;
  std::vector<double> acc(MomentSet::size_for(hi), 0.0);
  std::vector<double> xp(hi + 1), pp(hi + 1);
  for (std::size_t i = 0; i < e.size(); ++i) {
    fill_powers(e.x[i], hi, xp.data());
    fill_powers(e.p[i], hi, pp.data());
    for (int s = 1; s <= hi; ++s)
      for (int k = 0; k <= s; ++k) acc[MomentSet::index(s - k, k)] += xp[s - k] * pp[k];
  }
  const double n = static_cast<double>(e.size());
  for (auto& a : acc) a /= n;
  acc[0] = 1.0;
  MomentSet out(order, MomentFlavor::classical);
  out.values()[0] = 0.0;
  for (int s = 1; s <= order; ++s)
    for (int k = 0; k <= s; ++k) {
      const double m1 = acc[MomentSet::index(s - k, k)];
      const double m2 = acc[MomentSet::index(2 * (s - k), 2 * k)];
      out(s - k, k) = std::sqrt(std::max(0.0, m2 - m1 * m1) / n);
    }
  return out;
}

MomentSet moments_from_gaussian(const GaussianState& g, int order, MomentFlavor flavor) {
  check_order(order);
  g.validate();
  return gaussian_raw_moments(g.mean_x, g.mean_p, g.covariance(), order, flavor);
}

}  // namespace phaseflow
