#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "phaseflow/gaussian.hpp"
#include "phaseflow/potential.hpp"

namespace phaseflow {

/// Forward-mode dual number a + b eps, eps^2 = 0. Running a map on duals carries
/// one tangent vector through its exact linearization.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit on purpose, constants mix freely
  Dual(double value, double tangent) : v(value), d(tangent) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual operator+(Dual a, double b) { return {a.v + b, a.d}; }
inline Dual operator+(double a, Dual b) { return {a + b.v, b.d}; }
inline Dual operator-(Dual a, double b) { return {a.v - b, a.d}; }
inline Dual operator-(double a, Dual b) { return {a - b.v, -b.d}; }
inline Dual operator*(Dual a, double b) { return {a.v * b, a.d * b}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual operator/(Dual a, double b) { return {a.v / b, a.d / b}; }

enum class LyapunovSystem {
  tangent_2d,   // classical mean-field trajectory with its linearized perturbation
  gaussian_4d,  // (xbar, pbar, rho, gamma) under the Gaussian Hamiltonian
};

std::string_view to_string(LyapunovSystem s);

struct LyapunovJob {
  LyapunovSystem system = LyapunovSystem::tangent_2d;
  PolynomialPotential potential;
  /// Fiducial initial condition. The 2D system reads only the means.
  TdvpState initial;
  double dt = 1e-3;
  double renorm_interval = 0.5;
  double t_total = 100.0;
  double transient_fraction = 0.1;
  int blocks = 10;

  void validate() const;
};

struct LyapunovResult {
  LyapunovSystem system = LyapunovSystem::tangent_2d;
  double lambda_max = 0.0;
  double standard_error = 0.0;
  int blocks = 0;
  double t_total = 0.0;
  double renorm_interval = 0.0;
  std::vector<double> block_estimates;
  /// False when the first-half and second-half block means differ by more than
  /// five pooled standard errors.
  bool converged = true;
  std::string failure_reason;  // set when the flow left its domain
};

/// Benettin estimate: RK4 on dual numbers, renormalized every renorm_interval,
/// log stretching averaged after the transient.
LyapunovResult lyapunov_max(const LyapunovJob& job);

}  // namespace phaseflow
