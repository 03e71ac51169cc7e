#pragma once

// Scenario documents and the batch pipelines behind the CLI.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fvortex/dynamics.hpp"
#include "fvortex/finsler.hpp"
#include "fvortex/vortex_energy.hpp"

namespace fvortex {

inline constexpr int kScenarioVersion = 1;
inline constexpr int kMinGrid = 16;

std::string_view library_version();

enum class Task { Energy, Stability, Flow, RandersDrift, Convergence };
std::string_view task_name(Task t);

struct PresetInfo {
  Preset preset;
  std::string_view name;
  std::vector<std::string_view> parameter_names;
  std::vector<double> defaults;
  std::string_view summary;
};

const std::vector<PresetInfo>& preset_catalog();

struct StructureSpec {
  Preset preset = Preset::Identity;
  std::vector<double> params;
  MeasureKind measure = MeasureKind::HolmesThompson;

  bool operator==(const StructureSpec&) const = default;
};

FinslerStructure build_structure(const StructureSpec& spec);

struct Scenario {
  int spec_version = kScenarioVersion;
  std::string name = "scenario";
  StructureSpec structure;
  int grid_n = 128;

  std::vector<std::array<double, 2>> positions;
  std::vector<int> degrees;
  double epsilon = 0.01;
  double separation_exponent = 0.5;
  double separation_constant = 1.0;

  Task task = Task::Energy;
  double t_max = 0.1;
  double grad_tol = 1e-6;
  double rtol = 1e-6;
  double dt0 = 1e-4;
  bool adaptive = true;
  MobilityLaw law = MobilityLaw::LegendreGradient;
  std::vector<double> t_list{0.02, 0.01, 0.005};  // expansion steps
  int probes = 3;                                 // random admissible displacements
  std::vector<double> b_ladder{0.2, 0.1, 0.05};
  std::vector<int> grid_ladder{32, 64, 128};

  std::string out_dir = "out";
  std::uint64_t seed = 1;

  bool operator==(const Scenario&) const = default;
};

VortexConfiguration configuration(const Scenario& s);

/// Parses and validates a JSON document. Unknown keys, wrong types and
/// unknown names raise SchemaError with a JSON-pointer path; violated
/// invariants raise ValidationError.
Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::filesystem::path& path);

/// The fully defaulted document, pretty-printed. parse_scenario of the result
/// gives back an equal Scenario.
std::string scenario_json(const Scenario& s);

struct RunOptions {
  int threads = 1;
  int grid_override = 0;  // 0 keeps the scenario's grid
  std::filesystem::path out_dir;  // empty keeps the scenario's directory
};

struct RunResult {
  int exit_code = 0;  // 0 success, 2 invalid input, 3 numerical failure
  std::string message;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;
};

/// Runs the task and writes summary.json plus its CSVs. Never throws for
/// library errors; they are mapped onto the exit code and recorded in the
/// summary when the output directory is writable.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace fvortex
