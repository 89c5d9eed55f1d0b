#include "phaseflow/moments.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace phaseflow {

namespace {

constexpr int kBinomialTable = 64;

const std::array<std::array<double, kBinomialTable>, kBinomialTable>& binomial_table() {
  static const auto table = [] {
    std::array<std::array<double, kBinomialTable>, kBinomialTable> t{};
    for (int n = 0; n < kBinomialTable; ++n) {
      t[n][0] = 1.0;
      for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0.0);
    }
    return t;
  }();
  return table;
}

// powers[j] = base^j for j = 0..n
std::vector<double> powers(double base, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  out[0] = 1.0;
  for (int j = 1; j <= n; ++j) out[j] = out[j - 1] * base;
  return out;
}

}  // namespace

std::string_view to_string(MomentFlavor f) {
  return f == MomentFlavor::classical ? "classical" : "quantum";
}

MomentSet::MomentSet(int order, MomentFlavor flavor) : order_(order), flavor_(flavor) {
  if (order < 0) throw std::invalid_argument("moment order must be non-negative");
  values_.assign(size_for(order), 0.0);
  values_[0] = 1.0;
}

Covariance MomentSet::covariance() const {
  if (order_ < 2) throw std::logic_error("covariance requires moment order >= 2");
  const double mx = mean_x();
  const double mp = mean_p();
  return {(*this)(2, 0) - mx * mx, (*this)(1, 1) - mx * mp, (*this)(0, 2) - mp * mp};
}

MomentSet MomentSet::truncated(int new_order) const {
  if (new_order > order_) throw std::invalid_argument("cannot truncate to a higher order");
  MomentSet out(new_order, flavor_);
  for (std::size_t i = 0; i < out.values_.size(); ++i) out.values_[i] = values_[i];
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (n < kBinomialTable) return binomial_table()[n][k];
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double double_factorial(int n) {
  double r = 1.0;
  for (int i = n; i > 1; i -= 2) r *= i;
  return r;
}

CentralMoments central_from_raw(const MomentSet& raw) {
  const int order = raw.order();
  CentralMoments out{raw.mean_x(), raw.mean_p(), MomentSet(order, raw.flavor())};
  const auto ax = powers(-out.mean_x, order);
  const auto ap = powers(-out.mean_p, order);
  for (int s = 1; s <= order; ++s) {
    for (int k = 0; k <= s; ++k) {
      const int n = s - k;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= k; ++j)
          acc += binomial(n, i) * binomial(k, j) * raw(i, j) * ax[n - i] * ap[k - j];
      out.table(n, k) = acc;
    }
  }
  if (order >= 1) {
    out.table(1, 0) = 0.0;
    out.table(0, 1) = 0.0;
  }
  return out;
}

MomentSet raw_from_central(const CentralMoments& central) {
  const auto& c = central.table;
  const int order = c.order();
  MomentSet raw(order, c.flavor());
  const auto ax = powers(central.mean_x, order);
  const auto ap = powers(central.mean_p, order);
  for (int s = 1; s <= order; ++s) {
    for (int k = 0; k <= s; ++k) {
      const int n = s - k;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= k; ++j) {
          // first central moments are zero by definition
          if (i + j == 1) continue;
          acc += binomial(n, i) * binomial(k, j) * c(i, j) * ax[n - i] * ap[k - j];
        }
      raw(n, k) = acc;
    }
  }
  return raw;
}

double wick_central_moment(const Covariance& c, int n, int k) {
  if (n < 0 || k < 0) throw std::invalid_argument("moment indices must be non-negative");
  if ((n + k) % 2 != 0) return 0.0;
  // Sum over the number m of mixed (d, e) pairs; the remaining d's and e's pair among themselves.
  double acc = 0.0;
  for (int m = n % 2; m <= std::min(n, k); m += 2) {
    const int a = (n - m) / 2;
    const int b = (k - m) / 2;
    if (2 * b + m != k) continue;
    // n! k! / (m! a! b! 2^a 2^b) = C(n, m) C(k, m) m! (n-m-1)!! (k-m-1)!!
    const double pairings = binomial(n, m) * binomial(k, m) * std::tgamma(m + 1.0) *
                            double_factorial(n - m - 1) * double_factorial(k - m - 1);
    acc += pairings * std::pow(c.xp, m) * std::pow(c.xx, a) * std::pow(c.pp, b);
  }
  return acc;
}

MomentSet gaussian_raw_moments(double mean_x, double mean_p, const Covariance& c, int order,
                               MomentFlavor flavor) {
  CentralMoments central{mean_x, mean_p, MomentSet(order, flavor)};
  for (int s = 2; s <= order; ++s)
    for (int k = 0; k <= s; ++k) central.table(s - k, k) = wick_central_moment(c, s - k, k);
  return raw_from_central(central);
}

MomentSet central_derivative(const MomentSet& raw, const MomentSet& raw_rate) {
  if (raw.order() != raw_rate.order()) throw std::invalid_argument("moment tables must share one order");
  const int order = raw.order();
  MomentSet out(order, raw.flavor());
  out.values()[0] = 0.0;
  if (order < 1) return out;
  const double X = -raw.mean_x();
  const double P = -raw.mean_p();
  const double dX = -raw_rate(1, 0);
  const double dP = -raw_rate(0, 1);
  const auto ax = powers(X, order);
  const auto ap = powers(P, order);
  for (int s = 2; s <= order; ++s) {
    for (int k = 0; k <= s; ++k) {
      const int n = s - k;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= k; ++j) {
          const double w = binomial(n, i) * binomial(k, j);
          const int a = n - i;
          const int b = k - j;
          double term = raw_rate(i, j) * ax[a] * ap[b];
          if (a > 0) term += raw(i, j) * a * ax[a - 1] * dX * ap[b];
          if (b > 0) term += raw(i, j) * b * ax[a] * ap[b - 1] * dP;
          acc += w * term;
        }
      out(n, k) = acc;
    }
  }
  return out;
}

}  // namespace phaseflow
