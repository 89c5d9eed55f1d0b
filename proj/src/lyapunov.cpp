#include "phaseflow/lyapunov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "phaseflow/rk4.hpp"

namespace phaseflow {

std::string_view to_string(LyapunovSystem s) {
  return s == LyapunovSystem::tangent_2d ? "tangent-2d" : "gaussian-4d";
}

void LyapunovJob::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("lyapunov dt must be positive");
  if (!(renorm_interval >= dt)) throw std::invalid_argument("renormalization interval must be at least dt");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
    throw std::invalid_argument("transient fraction must lie in [0, 1)");
  if (!(t_total > 0.0)) throw std::invalid_argument("lyapunov total time must be positive");
  if (blocks < 10) throw std::invalid_argument("lyapunov needs at least 10 blocks");
  if (system == LyapunovSystem::gaussian_4d) initial.g.validate();
}

namespace {

template <std::size_t N, class Rhs>
LyapunovResult benettin(const LyapunovJob& job, std::array<double, N> y0, const Rhs& rhs) {
  const int steps_per = std::max(1, static_cast<int>(std::lround(job.renorm_interval / job.dt)));
  const double dt = job.renorm_interval / steps_per;
  const long long intervals = std::llround(job.t_total / job.renorm_interval);
  const long long skip = std::llround(job.transient_fraction * static_cast<double>(intervals));
  const long long kept = intervals - skip;
  if (kept < job.blocks) throw std::invalid_argument("lyapunov run too short for the requested block count");

  std::array<Dual, N> y;
  for (std::size_t i = 0; i < N; ++i) y[i] = Dual(y0[i], 1.0 / std::sqrt(static_cast<double>(N)));

  LyapunovResult res;
  res.system = job.system;
  res.blocks = job.blocks;
  res.t_total = job.t_total;
  res.renorm_interval = job.renorm_interval;
  std::vector<double> block_sum(static_cast<std::size_t>(job.blocks), 0.0);
  std::vector<double> block_time(static_cast<std::size_t>(job.blocks), 0.0);
  double total_log = 0.0;

  double t = 0.0;
  for (long long j = 0; j < intervals; ++j) {
    for (int s = 0; s < steps_per; ++s) {
      y = rk4_step(rhs, t, y, dt);
      t += dt;
    }
    double norm2 = 0.0;
    bool finite = true;
    for (const auto& c : y) {
      norm2 += c.d * c.d;
      finite = finite && std::isfinite(c.v) && std::isfinite(c.d);
    }
    if (!finite || !(norm2 > 0.0)) {
      res.failure_reason = "flow left its domain at t = " + std::to_string(t);
      res.converged = false;
      return res;
    }
    const double norm = std::sqrt(norm2);
    for (auto& c : y) c.d /= norm;
    if (j < skip) continue;
    const double lg = std::log(norm);
    total_log += lg;
    const auto b = static_cast<std::size_t>((j - skip) * job.blocks / kept);
    block_sum[b] += lg;
    block_time[b] += job.renorm_interval;
  }

  res.lambda_max = total_log / (static_cast<double>(kept) * job.renorm_interval);
  const int nb = job.blocks;
  res.block_estimates.resize(static_cast<std::size_t>(nb));
  for (std::size_t b = 0; b < res.block_estimates.size(); ++b) res.block_estimates[b] = block_sum[b] / block_time[b];

  auto mean_var = [&](std::size_t lo, std::size_t hi) {
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += res.block_estimates[i];
    mean /= static_cast<double>(hi - lo);
    double var = 0.0;
    for (std::size_t i = lo; i < hi; ++i) var += (res.block_estimates[i] - mean) * (res.block_estimates[i] - mean);
    var /= static_cast<double>(hi - lo - 1);
    return std::pair{mean, var};
  };
  const auto all = mean_var(0, static_cast<std::size_t>(nb));
  res.standard_error = std::sqrt(all.second / nb);
  const auto half = static_cast<std::size_t>(nb / 2);
  const auto first = mean_var(0, half);
  const auto second = mean_var(half, static_cast<std::size_t>(nb));
  const double pooled = std::sqrt(first.second / static_cast<double>(half) +
                                  second.second / static_cast<double>(static_cast<std::size_t>(nb) - half));
  res.converged = std::abs(first.first - second.first) <= 5.0 * pooled;
  return res;
}

}  // namespace

LyapunovResult lyapunov_max(const LyapunovJob& job) {
  job.validate();
  const PolynomialPotential& pot = job.potential;
  const double m = pot.mass();
  if (job.system == LyapunovSystem::tangent_2d) {
    auto rhs = [&](double t, const std::array<Dual, 2>& y) {
      return std::array<Dual, 2>{y[1] / m, -pot.derivative_at(1, y[0], t)};
    };
    return benettin<2>(job, {job.initial.g.mean_x, job.initial.g.mean_p}, rhs);
  }
  const double k = job.initial.constraint_target();
  const ReducedState r = to_reduced(job.initial.g);
  auto rhs = [&](double t, const std::array<Dual, 4>& y) { return reduced_rhs(y, k, pot, t); };
  return benettin<4>(job, {r.xbar, r.pbar, r.rho, r.gamma}, rhs);
}

}  // namespace phaseflow
