#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "phaseflow/moments.hpp"
#include "phaseflow/potential.hpp"
#include "phaseflow/states.hpp"

namespace phaseflow {

/// Gaussian variational state: means, covariances and the purity functional
/// sigma2, which is fixed at construction and never recomputed.
struct TdvpState {
  GaussianState g;
  double sigma2 = 0.0;

  /// sigma2 = 1 / (2 pi hbar); g must satisfy det C = hbar^2/4.
  static TdvpState pure(const GaussianState& g, double hbar);
  /// sigma2 chosen so that the constraint holds for the given covariances.
  static TdvpState from_covariances(const GaussianState& g);

  /// (1 / (4 pi sigma2))^2, the value det C keeps along the flow.
  double constraint_target() const;
  /// (det C - target) / target
  double constraint_residual() const;
};

/// Canonical chart rho = sqrt(cxx), gamma = cxp / rho.
struct ReducedState {
  double xbar = 0.0;
  double pbar = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
};

ReducedState to_reduced(const GaussianState& g);
/// cpp = gamma^2 + K / rho^2 with K = (1 / (4 pi sigma2))^2.
GaussianState from_reduced(const ReducedState& r, double sigma2);

inline std::array<double, 5> to_array(const GaussianState& g) { return {g.mean_x, g.mean_p, g.cxx, g.cxp, g.cpp}; }
inline GaussianState from_array(const std::array<double, 5>& a) { return {a[0], a[1], a[2], a[3], a[4]}; }

/// Full self-consistent flow of the five Gaussian variables. The result holds
/// time derivatives in the GaussianState slots. No hbar enters.
GaussianState tdvp_rhs(const GaussianState& s, const PolynomialPotential& pot, double t = 0.0);
/// Mean follows the classical force only; covariances driven by V''(xbar).
GaussianState heller_rhs(const GaussianState& s, const PolynomialPotential& pot, double t = 0.0);
/// Heller covariances with the quadratic back-reaction -cxx V'''/2 on the mean.
GaussianState consistent_tga_rhs(const GaussianState& s, const PolynomialPotential& pot, double t = 0.0);

/// (pbar^2 + cpp)/2m + sum_k V^{(2k)}(xbar) cxx^k / (2^k k!)
double tdvp_energy(const GaussianState& s, const PolynomialPotential& pot, double t = 0.0);
/// Quadratically truncated energy (pbar^2 + cpp)/2m + V + cxx V''/2, conserved by consistent_tga_rhs.
double tga_energy(const GaussianState& s, const PolynomialPotential& pot, double t = 0.0);
/// pbar^2/2m + gamma^2/2m + K/(2 m rho^2) + sum_{n>=0} rho^{2n}/(2^n n!) V^{(2n)}(xbar)
double hg_energy(const ReducedState& r, double sigma2, const PolynomialPotential& pot, double t = 0.0);
/// (pbar / 2m) V'''(xbar) cxx: rate of change of tga_energy along the Heller flow.
double heller_energy_drift(const GaussianState& s, const PolynomialPotential& pot, double t = 0.0);

/// Five-point derivative of tga_energy along the Heller flow through g, built
/// from RK4 steps of size h taken backward and forward from g.
double heller_energy_rate_fd(const GaussianState& g, const PolynomialPotential& pot, double h, double t = 0.0);

/// 2 pi / sqrt(|<V''>| / m) with <V''> the Gaussian average at t = 0; for flat
/// potentials the free variance-doubling time m sqrt(cxx / cpp).
double dynamical_time(const GaussianState& g, const PolynomialPotential& pot);

/// gamma^2/2m + 1/(2 m rho^2 (4 pi sigma2)^2) + V''(xbar) rho^2 / 2.
/// drop_constraint removes the middle term (the sigma2 -> infinity limit).
double fluct_hamiltonian(double rho, double gamma, double xbar, double sigma2, const PolynomialPotential& pot,
                         double t = 0.0, bool drop_constraint = false);

/// Hamilton equations of hg_energy in (xbar, pbar, rho, gamma), K = (1/(4 pi sigma2))^2.
/// Templated so the tangent flow can run on dual numbers.
template <class S>
std::array<S, 4> reduced_rhs(const std::array<S, 4>& y, double K, const PolynomialPotential& pot, double t) {
  const double m = pot.mass();
  const int d = pot.degree();
  const S& x = y[0];
  const S& rho = y[2];
  const S rho2 = rho * rho;
  // force on the mean: -sum_{n>=0} rho^{2n} / (2^n n!) V^{(2n+1)}
  S force = S(0.0);
  S pw = S(1.0);
  double c = 1.0;
  for (int n = 0; 2 * n + 1 <= d; ++n) {
    force = force - c * pw * pot.derivative_at(2 * n + 1, x, t);
    pw = pw * rho2;
    c /= 2.0 * (n + 1);
  }
  // -dH/drho restricted to the potential part: -sum_{n>=1} rho^{2n-1} / (2^{n-1} (n-1)!) V^{(2n)}
  S fr = S(0.0);
  pw = rho;
  c = 1.0;
  for (int n = 1; 2 * n <= d; ++n) {
    fr = fr - c * pw * pot.derivative_at(2 * n, x, t);
    pw = pw * rho2;
    c /= 2.0 * n;
  }
  const S inv = S(1.0) / rho;
  return {y[1] / m, force, y[3] / m, fr + (K / m) * inv * inv * inv};
}

enum class GaussianRule { tdvp, heller, consistent_tga };

std::string_view to_string(GaussianRule r);
GaussianState gaussian_rhs(GaussianRule rule, const GaussianState& s, const PolynomialPotential& pot, double t);
/// The energy each rule is judged by: tga_energy for consistent_tga, tdvp_energy otherwise.
double rule_energy(GaussianRule rule, const GaussianState& s, const PolynomialPotential& pot, double t);

struct GaussianRun {
  std::vector<double> times;
  std::vector<GaussianState> states;
  std::vector<double> energy;
  std::vector<double> constraint_residual;
  std::optional<double> failure_time;
  std::string failure_reason;

  bool ok() const { return !failure_time.has_value(); }
};

/// Fixed-step RK4 on all five variables; cxx <= 0 or non-finite values stop the run.
GaussianRun propagate_gaussian(const TdvpState& s0, const PolynomialPotential& pot, GaussianRule rule, double dt,
                               double t_final, int stride = 1, double t0 = 0.0);

/// Same flow integrated in the (rho, gamma) chart and mapped back.
GaussianRun propagate_reduced(const TdvpState& s0, const PolynomialPotential& pot, double dt, double t_final,
                              int stride = 1, double t0 = 0.0);

/// Weighted sum of independently propagated Gaussian packets.
struct GaussianSum {
  std::vector<double> weights;
  std::vector<GaussianState> packets;

  void validate() const;  // weights >= 0, sum 1 within 1e-12, packets valid

  static GaussianSum single(const GaussianState& g);
  /// `count` equal-weight packets on the ellipse mean + r L (cos a, sin a), C = L L^T,
  /// each with covariance (1 - r^2/2) C, so the mixture keeps the parent's mean and
  /// covariance. Needs count >= 3 and 0 < r < sqrt(2).
  static GaussianSum auto_tile(const GaussianState& parent, int count, double r);
};

struct MtgaRun {
  std::vector<double> times;
  std::vector<GaussianSum> sums;
  std::optional<double> failure_time;
  std::string failure_reason;

  bool ok() const { return !failure_time.has_value(); }
};

MtgaRun mtga_propagate(const GaussianSum& gs, const PolynomialPotential& pot, GaussianRule rule, double dt,
                       double t_final, int stride = 1);
double mtga_density(const GaussianSum& gs, double x, double p);
/// Mixture moments sum_i w_i <x^n p^k>_i.
MomentSet mtga_moments(const GaussianSum& gs, int order, MomentFlavor flavor = MomentFlavor::classical);

}  // namespace phaseflow
