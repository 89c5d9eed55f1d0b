#include "phaseflow/potential.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phaseflow {

PolynomialPotential::PolynomialPotential() : coeffs_{0.0} {}

PolynomialPotential::PolynomialPotential(std::vector<double> coefficients, double mass,
                                         std::vector<CoefficientDrive> drives)
    : coeffs_(std::move(coefficients)), mass_(mass) {
  if (!(mass_ > 0.0) || !std::isfinite(mass_)) throw std::invalid_argument("potential mass must be positive");
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  for (double c : coeffs_)
    if (!std::isfinite(c)) throw std::invalid_argument("potential coefficients must be finite");

  for (const auto& d : drives) {
    if (d.k < 0 || d.k > kMaxDegree)
      throw std::invalid_argument("drive index k=" + std::to_string(d.k) + " outside [0, " +
                                  std::to_string(kMaxDegree) + "]");
    if (d.amplitude != 0.0) drives_.push_back(d);
  }

  int deg = 0;
  for (int k = static_cast<int>(coeffs_.size()) - 1; k >= 0; --k) {
    if (coeffs_[k] != 0.0) {
      deg = k;
      break;
    }
  }
  for (const auto& d : drives_) deg = std::max(deg, d.k);
  if (deg > kMaxDegree)
    throw std::invalid_argument("potential degree " + std::to_string(deg) + " exceeds " +
                                std::to_string(kMaxDegree));
  degree_ = deg;
  coeffs_.resize(static_cast<std::size_t>(deg) + 1, 0.0);
}

PolynomialPotential PolynomialPotential::harmonic(double mass, double omega, double omega_squared_sign) {
  const double sign = omega_squared_sign < 0.0 ? -1.0 : 1.0;
  return PolynomialPotential({0.0, 0.0, 0.5 * sign * mass * omega * omega}, mass);
}

double PolynomialPotential::coefficient_at(int k, double t) const {
  double c = coeffs_[static_cast<std::size_t>(k)];
  for (const auto& d : drives_)
    if (d.k == k) c += d.amplitude * std::cos(d.omega * t + d.phase);
  return c;
}

std::vector<double> PolynomialPotential::coefficients_at(double t) const {
  std::vector<double> c(coeffs_.size());
  for (int k = 0; k <= degree_; ++k) c[static_cast<std::size_t>(k)] = coefficient_at(k, t);
  return c;
}

std::vector<double> PolynomialPotential::derivative_coefficients(int n, double t) const {
  if (n < 0) throw std::invalid_argument("derivative order must be non-negative");
  if (n > degree_) return {};
  std::vector<double> out(static_cast<std::size_t>(degree_ - n) + 1);
  for (int k = n; k <= degree_; ++k)
    out[static_cast<std::size_t>(k - n)] = coefficient_at(k, t) * falling_factorial(k, n);
  return out;
}

double PolynomialPotential::evaluate(double x, double t) const { return derivative_at(0, x, t); }

double PolynomialPotential::derivative(int n, double x, double t) const {
  if (n < 0) throw std::invalid_argument("derivative order must be non-negative");
  if (n > degree_) return 0.0;
  return derivative_at(n, x, t);
}

}  // namespace phaseflow
