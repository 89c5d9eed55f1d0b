#pragma once

#include <cstddef>

namespace phaseflow {

/// One classical fourth-order Runge-Kutta step for any indexable state
/// (std::array, std::vector) whose elements support +, * with double.
template <class State, class Rhs>
State rk4_step(const Rhs& rhs, double t, const State& y, double dt) {
  const std::size_t n = y.size();
  const State k1 = rhs(t, y);
  State tmp = y;
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + (0.5 * dt) * k1[i];
  const State k2 = rhs(t + 0.5 * dt, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + (0.5 * dt) * k2[i];
  const State k3 = rhs(t + 0.5 * dt, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
  const State k4 = rhs(t + dt, tmp);
  State out = y;
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace phaseflow
