#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseflow/potential.hpp"
#include "phaseflow/states.hpp"

namespace phaseflow {

struct IntegratorConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  int stride = 1;  // observer fires every `stride` steps and at the last step

  void validate() const;
  long long steps() const;
};

/// A reference evolution left its valid domain (escaped particle, clipped grid).
/// `time` is when the violation was detected.
class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

using EnsembleObserver = std::function<void(double t, const TrajectoryEnsemble&)>;
using WavefunctionObserver = std::function<void(double t, const WavefunctionGrid&)>;
using PhaseGridObserver = std::function<void(double t, const PhaseSpaceGrid&)>;

/// Kick-drift-kick leapfrog applied to every particle, forces evaluated at the
/// half step. The observer sees t0 and every output step. Throws OracleError when
/// any |x| exceeds escape_bound.
void leapfrog_evolve(TrajectoryEnsemble& e, const PolynomialPotential& pot, const IntegratorConfig& cfg,
                     const EnsembleObserver& observe, double escape_bound = 1e6, double t0 = 0.0);
/// Convenience form storing every output ensemble.
std::vector<TrajectoryEnsemble> leapfrog_series(TrajectoryEnsemble e, const PolynomialPotential& pot,
                                                const IntegratorConfig& cfg, double escape_bound = 1e6);

/// Strang splitting exp(-iT dt/2) exp(-iV(t + dt/2) dt) exp(-iT dt/2) with FFTs.
/// Position and momentum edge densities are checked at every output; a ratio above
/// edge_tolerance throws OracleError.
void splitstep_evolve(WavefunctionGrid& w, const PolynomialPotential& pot, const IntegratorConfig& cfg,
                      const WavefunctionObserver& observe, double edge_tolerance = 1e-10, double t0 = 0.0);
std::vector<WavefunctionGrid> splitstep_series(WavefunctionGrid w, const PolynomialPotential& pot,
                                               const IntegratorConfig& cfg, double edge_tolerance = 1e-10);

struct LiouvilleOptions {
  /// Leapfrog substeps used to trace each characteristic back over one dt.
  int substeps = 1;
  /// Abort when the outer `boundary_band` cells hold more than this fraction of the mass.
  double boundary_tolerance = 1e-8;
  int boundary_band = 2;
};

/// Semi-Lagrangian Liouville solver: every node is traced back one step along the
/// leapfrog characteristic and f is interpolated there with tensor cubic Lagrange
/// stencils (values outside the grid count as zero). Static potentials reuse the
/// stencils across steps.
void liouville_evolve(PhaseSpaceGrid& f, const PolynomialPotential& pot, const IntegratorConfig& cfg,
                      const PhaseGridObserver& observe, const LiouvilleOptions& opts = {}, double t0 = 0.0);
std::vector<PhaseSpaceGrid> liouville_series(PhaseSpaceGrid f, const PolynomialPotential& pot,
                                             const IntegratorConfig& cfg, const LiouvilleOptions& opts = {});

/// Fraction of sum |f| held by the outer `band` rows and columns.
double boundary_mass_fraction(const PhaseSpaceGrid& f, int band);

/// sqrt(sum (a - b)^2) / sqrt(sum b^2) on a shared lattice.
double relative_l2(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b);

}  // namespace phaseflow
