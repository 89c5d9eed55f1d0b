#include "phaseflow/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "phaseflow/rk4.hpp"

namespace phaseflow {

std::string_view to_string(Closure c) {
  switch (c) {
    case Closure::gaussian_wick:
      return "gaussian-wick";
    case Closure::zero_central:
      return "zero-central-above-M";
  }
  return "unknown";
}

int HierarchySpec::required_order() const { return std::max(order, order + potential.degree() - 2); }

void HierarchySpec::validate() const {
  if (order < kMinOrder || order > kMaxOrder)
    throw std::invalid_argument("hierarchy order must be in [" + std::to_string(kMinOrder) + ", " +
                                std::to_string(kMaxOrder) + "], got " + std::to_string(order));
  if (flavor == MomentFlavor::quantum_weyl && !(hbar > 0.0 && std::isfinite(hbar)))
    throw std::invalid_argument("quantum hierarchy needs hbar > 0");
  if (required_order() > kMaxClosedOrder)
    throw std::invalid_argument("hierarchy needs moments of order " + std::to_string(required_order()) +
                                " but closures are supported up to " + std::to_string(kMaxClosedOrder));
}

double theta_coeff(int n, int lambda, double hbar) {
  if (lambda < 3 || lambda % 2 == 0 || lambda > n) throw std::invalid_argument("theta_coeff needs odd 3 <= lambda <= n");
  double lambda_fact = 1.0;
  for (int i = 2; i <= lambda; ++i) lambda_fact *= i;
  // (-1)^lambda = -1 for odd lambda; i^{-(lambda-1)} = (-1)^{(lambda-1)/2}
  const double sign = ((lambda - 1) / 2) % 2 == 0 ? -1.0 : 1.0;
  return sign / lambda_fact * falling_factorial(n, lambda) * std::pow(0.5 * hbar, lambda - 1);
}

MomentSet close_moments(const MomentSet& ms, int target_order, Closure closure) {
  if (target_order <= ms.order()) return ms.truncated(target_order);
  const CentralMoments c = central_from_raw(ms);
  CentralMoments ext{c.mean_x, c.mean_p, MomentSet(target_order, ms.flavor())};
  const Covariance cov = ms.covariance();
  for (int s = 0; s <= target_order; ++s)
    for (int k = 0; k <= s; ++k) {
      const int n = s - k;
      if (s <= ms.order())
        ext.table(n, k) = c.table(n, k);
      else
        ext.table(n, k) = closure == Closure::gaussian_wick ? wick_closure(cov, n, k) : 0.0;
    }
  return raw_from_central(ext);
}

namespace {

// sum_j c_j <x^{n+j} p^k>
double poly_moment(const MomentSet& ext, const std::vector<double>& c, int n, int k) {
  double acc = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] != 0.0) acc += c[j] * ext(n + static_cast<int>(j), k);
  return acc;
}

MomentSet rhs_impl(const MomentSet& ms, double t, const HierarchySpec& spec, bool quantum) {
  const int order = ms.order();
  const double m = spec.potential.mass();
  const MomentSet ext = close_moments(ms, std::max(order, order + spec.potential.degree() - 2), spec.closure);
  const auto dv = spec.potential.derivative_coefficients(1, t);
  std::vector<std::vector<double>> odd;  // odd[l] = coefficients of V^{(l)}
  if (quantum) {
    odd.resize(static_cast<std::size_t>(std::max(order, 3)) + 1);
    for (int l = 3; l <= order; l += 2) odd[static_cast<std::size_t>(l)] = spec.potential.derivative_coefficients(l, t);
  }
  MomentSet out(order, ms.flavor());
  out(0, 0) = 0.0;
  for (int s = 1; s <= order; ++s)
    for (int k = 0; k <= s; ++k) {
      const int n = s - k;
      double d = 0.0;
      if (n > 0) d += n / m * ext(n - 1, k + 1);
      if (k > 0) d -= k * poly_moment(ext, dv, n, k - 1);
      if (quantum)
        for (int l = 3; l <= k; l += 2) {
          const auto& c = odd[static_cast<std::size_t>(l)];
          if (!c.empty()) d += theta_coeff(k, l, spec.hbar) * poly_moment(ext, c, n, k - l);
        }
      out(n, k) = d;
    }
  return out;
}

}  // namespace

MomentSet classical_rhs(const MomentSet& ms, double t, const HierarchySpec& spec) {
  return rhs_impl(ms, t, spec, false);
}

MomentSet quantum_rhs(const MomentSet& ms, double t, const HierarchySpec& spec) {
  return rhs_impl(ms, t, spec, true);
}

MomentSet hierarchy_rhs(const MomentSet& ms, double t, const HierarchySpec& spec) {
  return rhs_impl(ms, t, spec, spec.flavor == MomentFlavor::quantum_weyl);
}

double hierarchy_energy(const MomentSet& ms, double t, const HierarchySpec& spec) {
  const auto c = spec.potential.coefficients_at(t);
  const MomentSet ext = close_moments(ms, std::max(ms.order(), spec.potential.degree()), spec.closure);
  return ext(0, 2) / (2.0 * spec.potential.mass()) + poly_moment(ext, c, 0, 0);
}

HierarchyRun integrate_hierarchy(const HierarchySpec& spec, const MomentSet& initial, double dt, double t_final,
                                 int stride, double t0) {
  spec.validate();
  if (initial.order() != spec.order)
    throw std::invalid_argument("initial moments have order " + std::to_string(initial.order()) + ", hierarchy expects " +
                                std::to_string(spec.order));
  if (!(dt > 0.0) || stride < 1) throw std::invalid_argument("hierarchy integration needs dt > 0 and stride >= 1");

  HierarchyRun run;
  const double det0 = initial.covariance().det();
  auto record = [&](double t, const MomentSet& ms) {
    HierarchyDiagnostics d;
    d.t = t;
    d.det_c = ms.covariance().det();
    d.energy = hierarchy_energy(ms, t, spec);
    d.constraint_residual = det0 != 0.0 ? (d.det_c - det0) / det0 : d.det_c;
    run.times.push_back(t);
    run.moments.push_back(ms);
    run.diagnostics.push_back(d);
  };

  const MomentFlavor flavor = initial.flavor();
  auto rhs = [&](double t, const std::vector<double>& y) {
    MomentSet ms(spec.order, flavor);
    std::copy(y.begin(), y.end(), ms.values().begin());
    const MomentSet r = hierarchy_rhs(ms, t, spec);
    return std::vector<double>(r.values().begin(), r.values().end());
  };

  std::vector<double> y(initial.values().begin(), initial.values().end());
  record(t0, initial);
  const auto steps = static_cast<long long>(std::llround((t_final - t0) / dt));
  for (long long i = 1; i <= steps; ++i) {
    const double t = t0 + static_cast<double>(i - 1) * dt;
    y = rk4_step(rhs, t, y, dt);
    y[0] = 1.0;
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
      run.failure_time = t + dt;
      run.failure_reason = "non-finite moment";
      break;
    }
    if (i % stride == 0 || i == steps) {
      MomentSet ms(spec.order, flavor);
      std::copy(y.begin(), y.end(), ms.values().begin());
      record(t0 + static_cast<double>(i) * dt, ms);
    }
  }
  return run;
}

double CentralCheckReport::max_residual() const {
  double r = 0.0;
  for (const auto& t : terms) r = std::max(r, t.residual);
  return r;
}

const CentralCheckTerm* CentralCheckReport::find(const std::string& equation, int n) const {
  for (const auto& t : terms)
    if (t.equation == equation && t.n == n) return &t;
  return nullptr;
}

CentralCheckReport central_hierarchy_check(const HierarchySpec& spec, const MomentSet& state, double t) {
  spec.validate();
  const int order = state.order();
  const double m = spec.potential.mass();
  const bool quantum = spec.flavor == MomentFlavor::quantum_weyl;

  const MomentSet rate = hierarchy_rhs(state, t, spec);
  const MomentSet dc = central_derivative(state, rate).truncated(order);
  const MomentSet ext = close_moments(state, order + std::max(spec.potential.degree() - 1, 0), spec.closure);
  const CentralMoments c = central_from_raw(ext);
  const double xbar = c.mean_x;
  const double pbar = c.mean_p;

  // <d^a e^b V^{(l)}(x)> with x^j expanded about the mean
  auto with_derivative = [&](int a, int b, int l) {
    const auto coeffs = spec.potential.derivative_coefficients(l, t);
    double acc = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      if (coeffs[j] == 0.0) continue;
      const int jj = static_cast<int>(j);
      for (int i = 0; i <= jj; ++i)
        acc += coeffs[j] * binomial(jj, i) * std::pow(xbar, jj - i) * c.table(a + i, b);
    }
    return acc;
  };

  CentralCheckReport report;
  auto add = [&](std::string eq, int n, double closed, double derived) {
    const double scale = std::max({1.0, std::abs(closed), std::abs(derived)});
    report.terms.push_back({std::move(eq), n, closed, derived, std::abs(closed - derived) / scale});
  };

  const double mean_force = with_derivative(0, 0, 1);
  for (int n = 1; n <= order; ++n) {
    add("delta^n", n, n / m * c.table(n - 1, 1), dc(n, 0));

    const double classical = n * (c.table(0, n - 1) * mean_force - with_derivative(0, n - 1, 1));
    if (!quantum) {
      add("eta^n", n, classical, dc(0, n));
    } else {
      double closed = 0.0;
      double central = 0.0;
      for (int l = 3; l <= n; l += 2) {
        const double th = theta_coeff(n, l, spec.hbar);
        for (int b = 0; b <= n - l; ++b) closed += th * binomial(n - l, b) * std::pow(pbar, n - l - b) * with_derivative(0, b, l);
        central += th * with_derivative(0, n - l, l);
      }
      add("eta^n shifted", n, classical + closed, dc(0, n));
      add("eta^n central", n, classical + central, dc(0, n));
    }

    if (n + 1 <= order)
      add("delta^n eta", n, c.table(n, 0) * mean_force - with_derivative(n, 0, 1) + n / m * c.table(n - 1, 2), dc(n, 1));
  }

  // quadratic-order forms, exact only when V''' and above do not couple
  const double v2 = spec.potential.derivative(2, xbar, t);
  add("quadratic delta^2", 2, 2.0 / m * c.table(1, 1), dc(2, 0));
  add("quadratic eta^2", 2, -2.0 * c.table(1, 1) * v2, dc(0, 2));
  add("quadratic delta eta", 2, c.table(0, 2) / m - c.table(2, 0) * v2, dc(1, 1));
  return report;
}

}  // namespace phaseflow
