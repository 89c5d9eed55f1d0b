#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "phaseflow/cli.hpp"

namespace cli = phaseflow::cli;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kTreatmentFailure = 3;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cli::ConfigError("<file>", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int report(const cli::RunOutcome& outcome) {
  std::cout << "artifacts: " << outcome.directory.string() << '\n';
  if (!outcome.any_failure) return kOk;
  for (const auto& f : outcome.failures) std::cerr << "treatment failed: " << f << '\n';
  return kTreatmentFailure;
}

int run_config(const std::string& path) {
  const std::string text = read_text(path);
  return report(cli::run(cli::parse_scenario(text), text));
}

int run_preset(const std::string& name, const std::string& out, std::optional<std::uint64_t> seed) {
  const auto& preset = cli::find_preset(name);
  auto scenario = cli::parse_scenario(preset.yaml);
  if (!out.empty()) scenario.output = out;
  std::string text(preset.yaml);
  if (seed) {
    scenario.seed = *seed;
    text += "seed: " + std::to_string(*seed) + "\n";
  }
  text += "output: " + scenario.output.string() + "\n";
  return report(cli::run(scenario, text));
}

int validate_config(const std::string& path) {
  const auto s = cli::parse_scenario(read_text(path));
  std::cout << "ok: " << s.name << '\n'
            << "  dynamical time " << s.dynamical_time << ", dt " << s.dt << ", t_final " << s.t_final
            << ", output interval " << s.output_interval << '\n';
  for (const auto& t : s.treatments) std::cout << "  " << t.label << " (" << cli::to_string(t.kind) << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phaseflow: classical, quantum and Gaussian phase-space dynamics"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("config", config, "scenario file (YAML)")->required();

  std::string preset_name, out_dir;
  std::optional<std::uint64_t> seed;
  bool list = false;
  auto* preset = app.add_subcommand("preset", "run a shipped scenario (no name lists them)");
  preset->add_option("name", preset_name, "preset name");
  preset->add_option("--out", out_dir, "output directory");
  preset->add_option("--seed", seed, "ensemble seed");
  preset->add_flag("--list", list, "list presets and exit");
  bool print = false;
  preset->add_flag("--print", print, "print the preset config instead of running it");

  auto* validate = app.add_subcommand("validate", "check a scenario config without running it");
  validate->add_option("config", config, "scenario file (YAML)")->required();

  std::string rundir;
  auto* exporter = app.add_subcommand("export", "flatten a run directory into plotdata.csv");
  exporter->add_option("rundir", rundir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_config(config);
    if (*preset) {
      if (list || preset_name.empty()) {
        for (const auto& p : cli::presets()) std::cout << p.name << "\t" << p.description << '\n';
        return kOk;
      }
      if (print) {
        std::cout << cli::find_preset(preset_name).yaml;
        return kOk;
      }
      return run_preset(preset_name, out_dir, seed);
    }
    if (*validate) return validate_config(config);
    if (*exporter) {
      std::cout << cli::export_plotdata(rundir).string() << '\n';
      return kOk;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
