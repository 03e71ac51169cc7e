#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fvortex/errors.hpp"
#include "fvortex/scenario.hpp"

namespace {

int validate(const std::string& path) {
  const fvortex::Scenario s = fvortex::load_scenario(path);
  const fvortex::FinslerStructure f = fvortex::build_structure(s.structure);
  for (const std::string& w : fvortex::validate_configuration(fvortex::configuration(s), f)) {
    std::cerr << "warning: " << w << "\n";
  }
  std::cout << fvortex::scenario_json(s);
  return 0;
}

int presets() {
  for (const fvortex::PresetInfo& p : fvortex::preset_catalog()) {
    std::cout << p.name << "(";
    for (std::size_t k = 0; k < p.parameter_names.size(); ++k) {
      std::cout << (k ? ", " : "") << p.parameter_names[k] << " = " << p.defaults[k];
    }
    std::cout << ")  " << p.summary << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finslerian renormalized vortex energy and dynamics"};
  app.set_version_flag("--version", std::string(fvortex::library_version()));
  app.require_subcommand(1);

  std::string scenario_path;
  fvortex::RunOptions options;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run a scenario and write its artifacts");
  run->add_option("scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--threads", options.threads, "worker threads for Green solves")
      ->check(CLI::PositiveNumber);
  run->add_option("--grid-override", options.grid_override, "grid points per side")
      ->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "parse a scenario and print it with defaults filled");
  val->add_option("scenario", validate_path, "scenario JSON")->required()->check(CLI::ExistingFile);

  auto* list = app.add_subcommand("presets", "list structure presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*list) return presets();
    if (*val) return validate(validate_path);

    options.out_dir = out_dir;
    const fvortex::Scenario s = fvortex::load_scenario(scenario_path);
    const fvortex::RunResult r = fvortex::run_scenario(s, options);
    if (r.exit_code != 0) std::cerr << "error: " << r.message << "\n";
    for (const auto& f : r.files) std::cout << f.string() << "\n";
    return r.exit_code;
  } catch (const fvortex::ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const fvortex::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
