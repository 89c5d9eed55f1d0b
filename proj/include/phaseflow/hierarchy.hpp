#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phaseflow/moments.hpp"
#include "phaseflow/potential.hpp"

namespace phaseflow {

enum class Closure {
  gaussian_wick,  // untracked central moments from the Isserlis sum of the tracked covariance
  zero_central,   // central moments above the truncation order vanish
};

std::string_view to_string(Closure c);

/// Truncated raw-moment hierarchy: which equations (classical or quantum),
/// up to which order, and how untracked moments are supplied.
struct HierarchySpec {
  PolynomialPotential potential;
  int order = 2;
  MomentFlavor flavor = MomentFlavor::classical;
  double hbar = 1.0;
  Closure closure = Closure::gaussian_wick;

  static constexpr int kMinOrder = 2;
  static constexpr int kMaxOrder = 6;
  /// Highest order the closures are asked to reconstruct.
  static constexpr int kMaxClosedOrder = 16;

  /// Highest moment order the right-hand side reads: order + degree - 2.
  int required_order() const;
  void validate() const;
};

/// Coefficient of <p^{n-lambda} V^{(lambda)}> in d<p^n>/dt from the odd-derivative
/// quantum terms: (-1)^lambda / lambda! * n! / (n-lambda)! * (hbar / 2i)^{lambda-1}.
/// Requires odd lambda with 3 <= lambda <= n.
double theta_coeff(int n, int lambda, double hbar);

/// <d^n e^k> for a zero-mean Gaussian with covariance c (Isserlis).
inline double wick_closure(const Covariance& c, int n, int k) { return wick_central_moment(c, n, k); }

/// Raw moments up to `target_order`, filling orders above ms.order() from `closure`.
MomentSet close_moments(const MomentSet& ms, int target_order, Closure closure);

/// d/dt of every tracked raw moment under the classical Liouville flow.
MomentSet classical_rhs(const MomentSet& ms, double t, const HierarchySpec& spec);
/// classical_rhs plus the Theta(k, lambda) terms of the Wigner-function flow.
MomentSet quantum_rhs(const MomentSet& ms, double t, const HierarchySpec& spec);
/// Dispatches on spec.flavor.
MomentSet hierarchy_rhs(const MomentSet& ms, double t, const HierarchySpec& spec);

/// <H> = <p^2>/2m + <V>, with moments above the truncation order from the closure.
double hierarchy_energy(const MomentSet& ms, double t, const HierarchySpec& spec);

struct HierarchyDiagnostics {
  double t = 0.0;
  double det_c = 0.0;
  double energy = 0.0;
  /// (det C - det C(0)) / det C(0)
  double constraint_residual = 0.0;
};

struct HierarchyRun {
  std::vector<double> times;
  std::vector<MomentSet> moments;
  std::vector<HierarchyDiagnostics> diagnostics;
  /// Set when the integration produced a non-finite value; the series stops there.
  std::optional<double> failure_time;
  std::string failure_reason;

  bool ok() const { return !failure_time.has_value(); }
};

/// Fixed-step RK4 from `initial` (order spec.order) to t_final, recording every
/// `stride` steps. Blow-up is reported in the result, not thrown.
HierarchyRun integrate_hierarchy(const HierarchySpec& spec, const MomentSet& initial, double dt, double t_final,
                                 int stride = 1, double t0 = 0.0);

/// One comparison between a closed-form central-moment equation and the rate obtained
/// by differentiating central_from_raw along hierarchy_rhs.
struct CentralCheckTerm {
  std::string equation;
  int n = 0;
  double closed_form = 0.0;
  double derived = 0.0;
  double residual = 0.0;  // |closed_form - derived| / max(1, |closed_form|, |derived|)
};

struct CentralCheckReport {
  std::vector<CentralCheckTerm> terms;

  double max_residual() const;
  const CentralCheckTerm* find(const std::string& equation, int n) const;
};

/// Evaluates the closed-form central-moment equations
///   d<d^n>/dt   = (n/m) <d^{n-1} e>
///   d<e^n>/dt   = n [<e^{n-1}><V'> - <e^{n-1} V'>] (+ quantum correction)
///   d<d^n e>/dt = <d^n><V'> - <d^n V'> + (n/m) <d^{n-1} e^2>
/// and the quadratic-order forms for n = 2, against the programmatic derivation.
/// Quantum flavor reports the correction both with (<p> + e)^{n-lambda} ("eta^n shifted")
/// and with e^{n-lambda} ("eta^n central").
CentralCheckReport central_hierarchy_check(const HierarchySpec& spec, const MomentSet& state, double t = 0.0);

}  // namespace phaseflow
