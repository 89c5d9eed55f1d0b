#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace phaseflow {

/// Highest order accepted from the measurement pipelines (ensemble, grids).
inline constexpr int kMaxMeasuredOrder = 6;

enum class MomentFlavor { classical, quantum_weyl };

std::string_view to_string(MomentFlavor f);

/// Central second moments <d^2>, <d e>, <e^2> with d = x - <x>, e = p - <p>.
struct Covariance {
  double xx = 0.0;
  double xp = 0.0;
  double pp = 0.0;

  double det() const { return xx * pp - xp * xp; }
};

/// Table of phase-space moments <x^n p^k> for 0 <= n + k <= order.
/// Entries are stored by total order, then by k.
class MomentSet {
 public:
  MomentSet() : MomentSet(0, MomentFlavor::classical) {}
  MomentSet(int order, MomentFlavor flavor);

  static constexpr std::size_t index(int n, int k) {
    const auto s = static_cast<std::size_t>(n + k);
    return s * (s + 1) / 2 + static_cast<std::size_t>(k);
  }
  static constexpr std::size_t size_for(int order) { return index(0, order) + 1; }

  int order() const { return order_; }
  MomentFlavor flavor() const { return flavor_; }
  void set_flavor(MomentFlavor f) { flavor_ = f; }

  double operator()(int n, int k) const { return values_[index(n, k)]; }
  double& operator()(int n, int k) { return values_[index(n, k)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double mean_x() const { return order_ >= 1 ? (*this)(1, 0) : 0.0; }
  double mean_p() const { return order_ >= 1 ? (*this)(0, 1) : 0.0; }
  /// Central second moments; requires order >= 2.
  Covariance covariance() const;

  /// Copy restricted to total order <= new_order (new_order <= order()).
  MomentSet truncated(int new_order) const;

 private:
  int order_;
  MomentFlavor flavor_;
  std::vector<double> values_;
};

/// Central moments <d^n e^k> together with the means they are taken about.
struct CentralMoments {
  double mean_x = 0.0;
  double mean_p = 0.0;
  MomentSet table;
};

double binomial(int n, int k);
double double_factorial(int n);

CentralMoments central_from_raw(const MomentSet& raw);
MomentSet raw_from_central(const CentralMoments& central);

/// Isserlis pairing sum <d^n e^k> for a zero-mean bivariate Gaussian with covariance c.
/// Odd n + k gives zero.
double wick_central_moment(const Covariance& c, int n, int k);

/// Raw moments of a Gaussian with the given means and covariance, up to `order`.
MomentSet gaussian_raw_moments(double mean_x, double mean_p, const Covariance& c, int order,
                               MomentFlavor flavor = MomentFlavor::classical);

/// Time derivative of the central moments induced by a time derivative of the raw
/// moments (chain rule through central_from_raw). Both tables share one order.
MomentSet central_derivative(const MomentSet& raw, const MomentSet& raw_rate);

}  // namespace phaseflow
