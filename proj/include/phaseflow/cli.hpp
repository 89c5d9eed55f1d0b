#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phaseflow/gaussian.hpp"
#include "phaseflow/hierarchy.hpp"
#include "phaseflow/lyapunov.hpp"
#include "phaseflow/moments.hpp"
#include "phaseflow/potential.hpp"
#include "phaseflow/states.hpp"

namespace phaseflow::cli {

/// Bad or inconsistent configuration. field() is the dotted path of the
/// offending key, e.g. "initial.cxx" or "treatments[2].order".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class TreatmentKind { ensemble, schrodinger, liouville, hierarchy, tdvp, tga, heller, mtga, lyapunov };

std::string_view to_string(TreatmentKind k);

/// Pure starting point for a Lyapunov scan; cpp follows from det C = hbar^2/4.
struct ScanPoint {
  double xbar = 0.0;
  double pbar = 0.0;
  double cxx = 1.0;
};

/// One requested treatment. Only the fields of its kind are read.
struct Treatment {
  TreatmentKind kind = TreatmentKind::tdvp;
  std::string label;  // unique within a scenario, defaults to the kind name
  std::optional<double> dt;
  std::optional<double> output_interval;
  std::optional<double> t_final;  // shorter horizon than the scenario's

  // ensemble
  std::size_t particles = 100000;
  double escape_bound = 1e6;

  // schrodinger and liouville grids
  int points = 256;
  int p_points = 0;  // liouville momentum points; 0 means same as points
  double x_half_width = 10.0;
  double x_center = 0.0;
  double p_half_width = 10.0;
  double p_center = 0.0;
  double cat_separation = 0.0;  // schrodinger: two copies this many position widths apart
  bool wigner_diagnostics = true;
  int substeps = 1;  // liouville backtrace substeps

  // hierarchy
  int order = 2;
  Closure closure = Closure::gaussian_wick;
  MomentFlavor flavor = MomentFlavor::classical;

  // mtga, plus the rule used for each packet
  GaussianRule rule = GaussianRule::tdvp;
  int packets = 3;
  double radius = 0.8;
  GaussianSum explicit_sum;  // non-empty overrides auto tiling

  // lyapunov
  std::vector<LyapunovSystem> systems;
  double t_total = 4000.0;
  double renorm_interval = 0.5;  // in dynamical times
  double transient_fraction = 0.1;
  int blocks = 10;
  std::vector<ScanPoint> scan;
};

struct Scenario {
  std::string name;
  PolynomialPotential potential;
  GaussianState initial;
  bool pure = false;
  double hbar = 1.0;
  std::uint64_t seed = 1;
  double dynamical_time = 1.0;  // derived from potential and initial state
  double dt = 0.0;
  double t_final = 0.0;
  double output_interval = 0.0;
  int moment_order = 2;
  std::vector<Treatment> treatments;
  std::filesystem::path output;
};

/// Parses and validates; every problem surfaces as ConfigError.
Scenario parse_scenario(std::string_view yaml_text);
Scenario load_scenario(const std::filesystem::path& path);
/// Static checks of every invariant; throws ConfigError.
void validate(const Scenario& s);

struct PresetInfo {
  std::string_view name;
  std::string_view description;
  std::string_view yaml;
};
const std::vector<PresetInfo>& presets();
/// Throws ConfigError("preset", ...) for unknown names.
const PresetInfo& find_preset(std::string_view name);

struct RunOutcome {
  bool any_failure = false;
  std::filesystem::path directory;
  std::vector<std::string> failures;  // "label: reason at t = ..."
};

/// Runs every treatment, writes the per-treatment CSVs, compare.csv and
/// summary.json into s.output. `config_text` is copied to scenario.yaml.
RunOutcome run(const Scenario& s, std::string_view config_text = {});

/// Flattens a run directory into plotdata.csv: `treatment,file,t,quantity,value`.
std::filesystem::path export_plotdata(const std::filesystem::path& run_dir);

/// Linear resampling of a sampled series at t; NaN outside [times.front(), times.back()].
double resample(const std::vector<double>& times, const std::vector<double>& values, double t);

}  // namespace phaseflow::cli
