#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace phaseflow {

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, counter), so results do not depend on how work is partitioned.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x9E3779B97F4A7C15ULL)) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + counter * 0xD1B54A32D192ED03ULL);
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Two independent standard normals (Box-Muller) from counters 2c and 2c+1.
  std::pair<double, double> normal_pair(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace phaseflow
