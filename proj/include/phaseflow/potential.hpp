#pragma once

#include <span>
#include <vector>

namespace phaseflow {

/// Single-harmonic modulation of one polynomial coefficient:
/// c_k(t) = c_k + amplitude * cos(omega * t + phase).
struct CoefficientDrive {
  int k = 0;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
};

/// One-dimensional polynomial potential V(x, t) = sum_k c_k(t) x^k together
/// with the particle mass. Immutable after construction.
class PolynomialPotential {
 public:
  static constexpr int kMaxDegree = 10;

  /// V = 0, m = 1.
  PolynomialPotential();
  explicit PolynomialPotential(std::vector<double> coefficients, double mass = 1.0,
                               std::vector<CoefficientDrive> drives = {});

  /// V = m omega^2 x^2 / 2. A negative `omega_squared_sign` gives the inverted oscillator.
  static PolynomialPotential harmonic(double mass, double omega, double omega_squared_sign = 1.0);

  int degree() const { return degree_; }
  double mass() const { return mass_; }
  bool is_static() const { return drives_.empty(); }
  std::span<const double> coefficients() const { return coeffs_; }
  std::span<const CoefficientDrive> drives() const { return drives_; }

  /// Coefficients with the drive applied at time t (size degree() + 1).
  std::vector<double> coefficients_at(double t) const;

  /// Coefficients of the polynomial d^n V / dx^n at time t, lowest power first.
  /// Empty when n > degree().
  std::vector<double> derivative_coefficients(int n, double t) const;

  double evaluate(double x, double t = 0.0) const;

  /// Exact n-th derivative of the time-frozen polynomial at x; zero for n > degree().
  double derivative(int n, double x, double t = 0.0) const;

  /// Same as derivative() for any scalar type closed under + and * with double.
  template <class Scalar>
  Scalar derivative_at(int n, const Scalar& x, double t) const;

 private:
  double coefficient_at(int k, double t) const;

  std::vector<double> coeffs_;
  std::vector<CoefficientDrive> drives_;
  double mass_ = 1.0;
  int degree_ = 0;
};

/// Horner evaluation of sum_k c[k] x^k.
template <class Scalar>
Scalar horner(std::span<const double> c, const Scalar& x) {
  Scalar r = Scalar(0.0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

inline double falling_factorial(int k, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= static_cast<double>(k - i);
  return r;
}

template <class Scalar>
Scalar PolynomialPotential::derivative_at(int n, const Scalar& x, double t) const {
  Scalar r = Scalar(0.0);
  for (int k = degree_; k >= n; --k) r = r * x + coefficient_at(k, t) * falling_factorial(k, n);
  return r;
}

}  // namespace phaseflow
