#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "phaseflow/moments.hpp"

namespace phaseflow {

/// Gaussian phase-space state: means plus the 2x2 central covariance.
/// Shared initial condition for every dynamical treatment.
struct GaussianState {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double cxx = 0.5;
  double cxp = 0.0;
  double cpp = 0.5;

  Covariance covariance() const { return {cxx, cxp, cpp}; }
  double det() const { return cxx * cpp - cxp * cxp; }

  /// Throws std::invalid_argument unless cxx > 0, cpp > 0 and det C > 0.
  void validate() const;

  /// det C == hbar^2 / 4 within relative `rel_tol`.
  bool is_pure(double hbar, double rel_tol = 1e-12) const;

  /// Pure state with cpp fixed by cxx * cpp - cxp^2 = hbar^2 / 4.
  static GaussianState pure(double mean_x, double mean_p, double cxx, double cxp, double hbar);

  /// Oscillator coherent state: cxx = hbar / (2 m w), cpp = hbar m w / 2.
  static GaussianState coherent(double mean_x, double mean_p, double hbar, double mass = 1.0,
                                double omega = 1.0);
};

/// sigma_2 = 1 / (4 pi sqrt(det C)) of a Gaussian phase-space density.
double sigma2_of_gaussian(const GaussianState& g);

/// Point particles with uniform weight 1/N.
struct TrajectoryEnsemble {
  std::vector<double> x;
  std::vector<double> p;

  std::size_t size() const { return x.size(); }
};

/// Draws N particles from the bivariate normal of `g` via its Cholesky factor.
/// Particle i uses generator counter i, so the result is a pure function of (g, N, seed).
TrajectoryEnsemble sample_ensemble(const GaussianState& g, std::size_t n, std::uint64_t seed);

/// Uniform grid axis: value(i) = min + i * step for i in [0, n).
struct GridAxis {
  int n = 0;
  double min = 0.0;
  double step = 1.0;

  double at(int i) const { return min + i * step; }
  double max() const { return at(n - 1); }

  /// n points symmetric about `center` covering [center - half_width, center + half_width).
  static GridAxis centered(int n, double half_width, double center = 0.0);
};

/// Pure quantum state sampled on a uniform position grid.
struct WavefunctionGrid {
  GridAxis x;
  std::vector<std::complex<double>> psi;
  double hbar = 1.0;
  double mass = 1.0;

  double norm() const;
  void normalize();
  /// Throws unless the size is a power of two >= 64 and the state is normalized within 1e-8 (long split-step runs accumulate ~1e-16 per step).
  void validate() const;
  /// Fourier-conjugate momentum axis, p_k = 2 pi hbar k / (N dx), sorted ascending.
  GridAxis momentum_axis() const;
};

/// Amplitudes of the pure Gaussian with the given moments. The grid must contain the
/// packet: |psi| < 1e-12 at both edges.
WavefunctionGrid wavefunction_from_gaussian(const GaussianState& g, const GridAxis& x, double hbar,
                                            double mass = 1.0);

/// Normalized a * psi_1 + b * psi_2 on a common grid.
WavefunctionGrid superpose(const WavefunctionGrid& first, const WavefunctionGrid& second,
                           std::complex<double> a = 1.0, std::complex<double> b = 1.0);

/// Momentum density on momentum_axis(), normalized so that sum(rho) dp = 1.
std::vector<double> momentum_density(const WavefunctionGrid& w);

/// Real values on an (x, p) lattice, index [i * p.n + j] for x_i, p_j.
struct PhaseSpaceGrid {
  GridAxis x;
  GridAxis p;
  std::vector<double> f;

  double& at(int i, int j) { return f[static_cast<std::size_t>(i) * p.n + j]; }
  double at(int i, int j) const { return f[static_cast<std::size_t>(i) * p.n + j]; }
  double cell() const { return x.step * p.step; }
  double integral() const;
};

struct WignerGrid : PhaseSpaceGrid {
  double hbar = 1.0;
};

/// Gaussian density sampled on the lattice (classical phase-space grid).
PhaseSpaceGrid phase_grid_from_gaussian(const GaussianState& g, const GridAxis& x, const GridAxis& p);

/// Wigner function of a pure state. Rows are computed by a DFT over the offset
/// variable with psi evaluated at half-grid points by band-limited interpolation;
/// the momentum axis equals momentum_axis().
WignerGrid wigner_transform(const WavefunctionGrid& w);

/// sum f^n dx dp.
double sigma_n(const PhaseSpaceGrid& grid, int n);

/// Weyl-ordered moments: pure powers from the position and momentum densities,
/// mixed moments from the Wigner grid.
MomentSet moments_from_wavefunction(const WavefunctionGrid& w, int order);
MomentSet moments_from_wavefunction(const WavefunctionGrid& w, const WignerGrid& wigner, int order);

MomentSet moments_from_ensemble(const TrajectoryEnsemble& e, int order);
/// Standard error of each sample moment (sample std / sqrt(N)).
MomentSet moment_standard_errors(const TrajectoryEnsemble& e, int order);
MomentSet moments_from_grid(const PhaseSpaceGrid& grid, int order,
                            MomentFlavor flavor = MomentFlavor::classical);
MomentSet moments_from_wigner(const WignerGrid& grid, int order);
MomentSet moments_from_gaussian(const GaussianState& g, int order,
                                MomentFlavor flavor = MomentFlavor::classical);

/// Thrown when a grid clips its state or aliases its momentum content.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest |psi|^2 in the outer `band` cells relative to max |psi|^2.
double position_edge_ratio(const WavefunctionGrid& w, int band = 1);
/// Largest momentum density in the outer `band` bins relative to its maximum.
double momentum_edge_ratio(const WavefunctionGrid& w, int band = 1);

}  // namespace phaseflow
