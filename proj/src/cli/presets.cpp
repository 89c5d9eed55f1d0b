#include "phaseflow/cli.hpp"

namespace phaseflow::cli {

namespace {

// Shipped scenarios. Each is an ordinary config; `phaseflow preset NAME`
// writes it next to the run artifacts as scenario.yaml.

constexpr std::string_view kHarmonicExact = R"(name: harmonic-exact
hbar: 1.0
potential: {coeffs: [0, 0, 0.5], mass: 1.0}
initial: {xbar: 1.0, pbar: 0.5, cxx: 0.3, cxp: 0.1, pure: true}
integrator: {dynamical_times: 10, output_interval: 0.6283185307179586}
treatments:
  - {kind: schrodinger, points: 128, half_width: 10, dt: 5.0e-4}
  - {kind: ensemble, particles: 100000}
  - {kind: liouville, points: 384, x_half_width: 7, p_half_width: 7, dt: 0.05, substeps: 200}
  - {kind: tdvp}
  - {kind: heller}
  - {kind: tga}
  - {kind: hierarchy, label: hierarchy-classical, order: 2, flavor: classical}
  - {kind: hierarchy, label: hierarchy-quantum, order: 2, flavor: quantum}
  - {kind: hierarchy, label: hierarchy-m4, order: 4, flavor: quantum, closure: zero-central-above-M}
  - {kind: mtga, packets: 4, radius: 0.8}
  - {kind: lyapunov, systems: [tangent-2d, gaussian-4d], t_total: 400}
)";

constexpr std::string_view kFreeSpreading = R"(name: free-spreading
hbar: 1.0
potential: {coeffs: [0], mass: 1.0}
initial: {xbar: 0.0, pbar: 0.5, cxx: 0.25, pure: true}
integrator: {dynamical_times: 8, output_interval: 0.1}
treatments:
  - {kind: schrodinger, points: 512, half_width: 40, dt: 0.01}
  - {kind: ensemble, particles: 100000}
  - {kind: liouville, points: 512, p_points: 128, x_half_width: 30, p_half_width: 7, dt: 0.05}
  - {kind: tdvp}
  - {kind: hierarchy, order: 4, flavor: classical, closure: zero-central-above-M}
)";

constexpr std::string_view kCubicThirdMoment = R"(name: cubic-third-moment
hbar: 1.0
potential: {coeffs: [0, 0, 0, 0.1], mass: 1.0}
initial: {xbar: 0.3, pbar: 0.2, cxx: 0.5, cxp: 0.0, pure: true}
integrator: {t_final: 1.0, output_interval: 0.05}
treatments:
  - {kind: schrodinger, points: 512, half_width: 20, dt: 1.0e-3}
  - {kind: ensemble, particles: 1000000, dt: 0.01, escape_bound: 1000}
  - {kind: hierarchy, label: hierarchy-quantum, order: 4, flavor: quantum, closure: zero-central-above-M}
  - {kind: hierarchy, label: hierarchy-classical, order: 4, flavor: classical, closure: zero-central-above-M}
  - {kind: tdvp}
)";

// Double well x^4 - 2x^2: the single well x^4 (with or without a positive
// x^2 term) gave no positive 4D exponent in any scan. TGA is left out; its
// local harmonic fit drives cxx negative near the barrier within 4 time units.
constexpr std::string_view kQuarticSemiquantum = R"(name: quartic-semiquantum
hbar: 1.0
potential: {coeffs: [0, 0, -2, 0, 1], mass: 1.0}
initial: {xbar: 1.0, pbar: 0.0, cxx: 1.0, pure: true}
integrator: {dynamical_times: 10, dt: 1.0e-4}
treatments:
  - {kind: tdvp}
  - {kind: hierarchy, label: hierarchy-classical, order: 2, flavor: classical}
  - {kind: hierarchy, label: hierarchy-quantum, order: 2, flavor: quantum}
  - kind: lyapunov
    systems: [gaussian-4d, tangent-2d]
    dt: 1.0e-3
    t_total: 4000
    renorm_interval: 0.5
    scan:
      - {xbar: 1.0, cxx: 1.0}
      - {xbar: 0.3, cxx: 0.03}
      - {xbar: 1.5, cxx: 0.3}
      - {xbar: 0.5, cxx: 0.1}
      - {xbar: 1.0, cxx: 0.25}
      - {xbar: 2.0, cxx: 0.05}
)";

constexpr std::string_view kInvertedLyapunov = R"(name: inverted-lyapunov
hbar: 1.0
potential: {coeffs: [0, 0, -2], mass: 1.0}
initial: {xbar: 0.1, pbar: 0.0, cxx: 0.5, pure: true}
integrator: {dynamical_times: 1}
treatments:
  - {kind: tdvp}
  - {kind: hierarchy, order: 2, flavor: quantum}
  - {kind: lyapunov, systems: [tangent-2d, gaussian-4d], dt: 1.0e-3, t_total: 40, renorm_interval: 0.16}
)";

constexpr std::string_view kTwoPacketHudson = R"(name: two-packet-hudson
hbar: 1.0
potential: {coeffs: [0, 0, 0.5], mass: 1.0}
initial: {xbar: 0.0, pbar: 0.0, cxx: 0.5, pure: true}
integrator: {dynamical_times: 1, output_interval: 0.3141592653589793}
treatments:
  - {kind: schrodinger, label: single, points: 256, half_width: 16, dt: 1.0e-3}
  - {kind: schrodinger, label: cat, points: 256, half_width: 16, dt: 1.0e-3, cat_separation: 4}
  - kind: mtga
    label: mtga-pair
    members:
      - {weight: 0.5, xbar: -1.4142135623730951, pbar: 0, cxx: 0.5, cpp: 0.5}
      - {weight: 0.5, xbar: 1.4142135623730951, pbar: 0, cxx: 0.5, cpp: 0.5}
)";

constexpr std::string_view kHellerDrift = R"(name: heller-drift
hbar: 1.0
potential: {coeffs: [0, 0, 0, 0, 1], mass: 1.0}
initial: {xbar: 1.0, pbar: 0.5, cxx: 0.1, pure: true}
integrator: {dynamical_times: 10}
treatments:
  - {kind: heller}
  - {kind: tga}
  - {kind: tdvp}
)";

constexpr std::string_view kSigmaNQuartic = R"(name: sigma-n-quartic
hbar: 1.0
potential: {coeffs: [0, 0, 0, 0, 1], mass: 1.0}
initial: {xbar: 0.5, pbar: 0.0, cxx: 0.1, pure: true}
integrator: {dynamical_times: 5}
treatments:
  - {kind: schrodinger, points: 256, half_width: 8, dt: 2.0e-4}
  - {kind: liouville, label: liouville-coarse, dynamical_times: 1, points: 128, x_half_width: 3, p_half_width: 12, dt: 0.05, substeps: 50}
  - {kind: liouville, label: liouville-fine, dynamical_times: 1, points: 256, x_half_width: 3, p_half_width: 12, dt: 0.05, substeps: 50}
  - {kind: tdvp}
)";

}  // namespace

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> list = {
      {"harmonic-exact", "every treatment on the harmonic oscillator, where all of them are exact", kHarmonicExact},
      {"free-spreading", "free Gaussian spreading under the quantum, classical and Gaussian flows", kFreeSpreading},
      {"cubic-third-moment", "first hbar^2 correction to d<p^3>/dt in a cubic potential", kCubicThirdMoment},
      {"quartic-semiquantum", "double-well Gaussian system: Lyapunov scan of (xbar, cxx)", kQuarticSemiquantum},
      {"inverted-lyapunov", "inverted oscillator, analytic exponent omega = 2", kInvertedLyapunov},
      {"two-packet-hudson", "Wigner negativity of a two-packet superposition vs a single packet", kTwoPacketHudson},
      {"heller-drift", "energy drift of the Heller flow in a quartic well", kHellerDrift},
      {"sigma-n-quartic", "sigma_n functionals under quantum and classical quartic evolution", kSigmaNQuartic},
  };
  return list;
}

const PresetInfo& find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + std::string(p.name);
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace phaseflow::cli
