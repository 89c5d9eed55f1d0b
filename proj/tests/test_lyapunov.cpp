#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "phaseflow/lyapunov.hpp"

using namespace phaseflow;

namespace {

LyapunovJob job_for(PolynomialPotential pot, LyapunovSystem system, GaussianState g, double t_total, double dt = 1e-3) {
  LyapunovJob job;
  job.system = system;
  job.potential = std::move(pot);
  job.initial = TdvpState::pure(g, 1.0);
  job.dt = dt;
  job.t_total = t_total;
  return job;
}

}  // namespace

TEST_CASE("dual arithmetic follows the product and quotient rules") {
  const Dual x(2.0, 1.0);
  const Dual y = x * x * x - 3.0 * x + 1.0;
  CHECK(y.v == doctest::Approx(3.0));
  CHECK(y.d == doctest::Approx(9.0));
  const Dual q = 1.0 / x;
  CHECK(q.d == doctest::Approx(-0.25));
  const Dual z = (x - 1.0) / (x + 1.0);
  CHECK(z.d == doctest::Approx(2.0 / 9.0));
}

TEST_CASE("inverted oscillator rate") {
  // V = -m w^2 x^2 / 2 with w = 2, short renormalization keeps the vector finite
  const auto pot = PolynomialPotential::harmonic(1.0, 2.0, -1.0);
  auto job = job_for(pot, LyapunovSystem::tangent_2d, GaussianState::pure(0.1, 0.0, 0.5, 0, 1.0), 40.0);
  const auto r = lyapunov_max(job);
  CHECK(r.lambda_max == doctest::Approx(2.0).epsilon(0.01));
  CHECK(r.blocks == 10);
  CHECK(r.block_estimates.size() == 10);
}

TEST_CASE("harmonic oscillator has zero exponent") {
  auto job = job_for(PolynomialPotential({0, 0, 0.5}), LyapunovSystem::tangent_2d, GaussianState::pure(1.0, 0.0, 0.5, 0, 1.0), 500.0);
  const auto r = lyapunov_max(job);
  CHECK(std::abs(r.lambda_max) <= 1e-3);
  CHECK(r.converged);
}

TEST_CASE("linear potentials: the 4D and 2D exponents agree") {
  const auto pot = PolynomialPotential::harmonic(1.0, 1.5, -1.0);
  const auto g = GaussianState::pure(0.2, 0.1, 0.5, 0.0, 1.0);
  const auto two = lyapunov_max(job_for(pot, LyapunovSystem::tangent_2d, g, 30.0));
  const auto four = lyapunov_max(job_for(pot, LyapunovSystem::gaussian_4d, g, 30.0));
  CHECK(four.lambda_max == doctest::Approx(two.lambda_max).epsilon(0.02));
  const auto h2 = lyapunov_max(job_for(PolynomialPotential({0, 0, 0.5}), LyapunovSystem::tangent_2d, g, 500.0));
  const auto h4 = lyapunov_max(job_for(PolynomialPotential({0, 0, 0.5}), LyapunovSystem::gaussian_4d, g, 500.0));
  CHECK(std::abs(h4.lambda_max - h2.lambda_max) <= 2e-3);
}

TEST_CASE("double-well gaussian system is chaotic while its mean-field flow is not") {
  const PolynomialPotential pot({0, 0, -2, 0, 1});
  const auto g = GaussianState::pure(1.0, 0.0, 1.0, 0.0, 1.0);
  const auto four = lyapunov_max(job_for(pot, LyapunovSystem::gaussian_4d, g, 4000.0));
  const auto two = lyapunov_max(job_for(pot, LyapunovSystem::tangent_2d, g, 4000.0));
  CHECK(four.lambda_max > 3 * four.standard_error);
  CHECK(four.lambda_max > 0.05);
  CHECK(std::abs(two.lambda_max) <= 1e-3);
}

TEST_CASE("job validation") {
  auto job = job_for(PolynomialPotential({0, 0, 0.5}), LyapunovSystem::tangent_2d, GaussianState::pure(1.0, 0.0, 0.5, 0, 1.0), 100.0);
  job.blocks = 5;
  CHECK_THROWS(lyapunov_max(job));
  job.blocks = 10;
  job.renorm_interval = 0.0;
  CHECK_THROWS(lyapunov_max(job));
  job.renorm_interval = 0.5;
  job.transient_fraction = 1.0;
  CHECK_THROWS(lyapunov_max(job));
  job.transient_fraction = 0.1;
  job.t_total = 3.0;  // fewer kept intervals than blocks
  CHECK_THROWS(lyapunov_max(job));
}
