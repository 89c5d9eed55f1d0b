#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "phaseflow/moments.hpp"

using namespace phaseflow;

TEST_CASE("moment table layout runs by total order then k") {
  CHECK(MomentSet::index(0, 0) == 0);
  CHECK(MomentSet::index(1, 0) == 1);
  CHECK(MomentSet::index(0, 1) == 2);
  CHECK(MomentSet::index(2, 0) == 3);
  CHECK(MomentSet::index(0, 2) == 5);
  CHECK(MomentSet::size_for(6) == 28);
  MomentSet m(3, MomentFlavor::classical);
  CHECK(m(0, 0) == 1.0);
  m(2, 1) = 4.5;
  CHECK(m.truncated(3)(2, 1) == 4.5);
  CHECK(m.truncated(2).order() == 2);
}

TEST_CASE("isserlis sums reproduce the familiar gaussian identities") {
  const Covariance c{0.7, -0.2, 1.3};
  CHECK(wick_central_moment(c, 4, 0) == doctest::Approx(3 * c.xx * c.xx));
  CHECK(wick_central_moment(c, 3, 1) == doctest::Approx(3 * c.xp * c.xx));
  CHECK(wick_central_moment(c, 2, 2) == doctest::Approx(c.xx * c.pp + 2 * c.xp * c.xp));
  CHECK(wick_central_moment(c, 0, 6) == doctest::Approx(15 * c.pp * c.pp * c.pp));
  CHECK(wick_central_moment(c, 3, 0) == 0.0);
  CHECK(wick_central_moment(c, 2, 1) == 0.0);
  // orders <= 2 return the covariance itself
  CHECK(wick_central_moment(c, 2, 0) == c.xx);
  CHECK(wick_central_moment(c, 1, 1) == c.xp);
  CHECK(wick_central_moment(c, 0, 2) == c.pp);
  CHECK(wick_central_moment(c, 0, 0) == 1.0);
}

TEST_CASE("isserlis sum agrees with a sampled bivariate normal") {
  const Covariance c{0.8, 0.3, 0.5};
  const double l11 = std::sqrt(c.xx);
  const double l21 = c.xp / l11;
  const double l22 = std::sqrt(c.pp - l21 * l21);
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n01;
  const int n = 2000000;
  double s42 = 0.0, s42sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z1 = n01(gen), z2 = n01(gen);
    const double d = l11 * z1;
    const double e = l21 * z1 + l22 * z2;
    const double v = d * d * d * d * e * e;
    s42 += v;
    s42sq += v * v;
  }
  const double mean = s42 / n;
  const double se = std::sqrt((s42sq / n - mean * mean) / n);
  CHECK(std::abs(mean - wick_central_moment(c, 4, 2)) < 4 * se);
}

TEST_CASE("raw and central moments round trip") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MomentSet raw(6, MomentFlavor::classical);
    for (std::size_t i = 1; i < raw.values().size(); ++i) raw.values()[i] = u(gen);
    const MomentSet back = raw_from_central(central_from_raw(raw));
    for (std::size_t i = 0; i < raw.values().size(); ++i)
      CHECK(back.values()[i] == doctest::Approx(raw.values()[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("gaussian raw moments against hand expansions") {
  const Covariance c{0.4, 0.1, 0.9};
  const double mx = 0.7, mp = -1.2;
  const MomentSet m = gaussian_raw_moments(mx, mp, c, 4);
  CHECK(m(2, 0) == doctest::Approx(mx * mx + c.xx));
  CHECK(m(1, 1) == doctest::Approx(mx * mp + c.xp));
  CHECK(m(3, 0) == doctest::Approx(mx * mx * mx + 3 * mx * c.xx));
  CHECK(m(2, 1) == doctest::Approx(mx * mx * mp + mp * c.xx + 2 * mx * c.xp));
  CHECK(m(4, 0) == doctest::Approx(std::pow(mx, 4) + 6 * mx * mx * c.xx + 3 * c.xx * c.xx));
  const Covariance back = m.covariance();
  CHECK(back.xx == doctest::Approx(c.xx));
  CHECK(back.xp == doctest::Approx(c.xp));
  CHECK(back.pp == doctest::Approx(c.pp));
}

TEST_CASE("central_derivative matches a finite difference along a curve") {
  // raw(t) = raw0 + t * rate; central moments differentiated numerically
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  MomentSet raw = gaussian_raw_moments(0.3, -0.4, {0.6, 0.1, 0.7}, 5);
  MomentSet rate(5, MomentFlavor::classical);
  rate(0, 0) = 0.0;
  for (std::size_t i = 1; i < rate.values().size(); ++i) rate.values()[i] = u(gen);
  const MomentSet dc = central_derivative(raw, rate);
  const double h = 1e-5;
  auto at = [&](double t) {
    MomentSet r = raw;
    for (std::size_t i = 1; i < r.values().size(); ++i) r.values()[i] += t * rate.values()[i];
    return central_from_raw(r).table;
  };
  const MomentSet plus = at(h), minus = at(-h);
  for (std::size_t i = 0; i < dc.values().size(); ++i)
    CHECK(dc.values()[i] == doctest::Approx((plus.values()[i] - minus.values()[i]) / (2 * h)).epsilon(1e-7).scale(1.0));
}

TEST_CASE("binomial and double factorial") {
  CHECK(binomial(6, 3) == 20.0);
  CHECK(binomial(4, 0) == 1.0);
  CHECK(binomial(3, 5) == 0.0);
  CHECK(double_factorial(-1) == 1.0);
  CHECK(double_factorial(5) == 15.0);
  CHECK(double_factorial(6) == 48.0);
}
