#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fvortex/errors.hpp"
#include "fvortex/report_io.hpp"
#include "fvortex/scenario.hpp"

using namespace fvortex;
namespace fs = std::filesystem;

namespace {

const std::string kDipole = R"({
  "vortices": {"positions": [[0.25, 0.5], [0.75, 0.5]], "degrees": [1, -1]}
})";

std::string with(const std::string& extra) {
  return R"({"vortices": {"positions": [[0.25, 0.5], [0.75, 0.5]], "degrees": [1, -1]}, )" +
         extra + "}";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fvortex_scenario_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

std::string schema_path(const std::string& doc) {
  try {
    parse_scenario(doc);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("minimal document fills defaults") {
  const Scenario s = parse_scenario(kDipole);
  CHECK(s.grid_n == 128);
  CHECK(s.structure.preset == Preset::Identity);
  CHECK(s.structure.measure == MeasureKind::HolmesThompson);
  CHECK(s.task == Task::Energy);
  CHECK(s.spec_version == kScenarioVersion);
  CHECK(s.degrees == std::vector<int>{1, -1});

  // Every default appears in the echo.
  const auto echo = nlohmann::json::parse(scenario_json(s));
  CHECK(echo["grid"]["n"] == 128);
  CHECK(echo["structure"]["measure"] == "holmes-thompson");
  CHECK(echo["task"]["kind"] == "energy");
  CHECK(echo["task"]["rtol"] == 1e-6);
  CHECK(echo["vortices"]["epsilon"] == 0.01);
  CHECK(echo["seed"] == 1);
}

TEST_CASE("preset parameters default from the catalog") {
  const Scenario s = parse_scenario(with(R"("structure": {"preset": "diagonal"})"));
  CHECK(s.structure.params == std::vector<double>{4.0, 1.0});
  CHECK(preset_catalog().size() == 5);
  for (const PresetInfo& p : preset_catalog()) {
    CHECK(p.parameter_names.size() == p.defaults.size());
    CHECK_NOTHROW(build_structure({p.preset, p.defaults, MeasureKind::BusemannHausdorff}));
  }
}

TEST_CASE("schema errors carry paths") {
  CHECK(schema_path(with(R"("structure": {"preset": "hyperbolic"})")) == "/structure/preset");
  CHECK(schema_path(with(R"("grid": {"n": 64, "m": 3})")) == "/grid/m");
  CHECK(schema_path(with(R"("grid": {"n": 64.5})")) == "/grid/n");
  CHECK(schema_path(with(R"("task": {"kind": "flow", "t_max": "long"})")) == "/task/t_max");
  CHECK(schema_path(with(R"("task": "relax")")) == "/task");
  CHECK(schema_path(with(R"("colour": "blue")")) == "/colour");
  CHECK(schema_path(with(R"("spec_version": 2)")) == "/spec_version");
  CHECK(schema_path(with(R"("structure": {"preset": "diagonal", "params": [1.0]})")) ==
        "/structure/params");
  CHECK(schema_path(R"({"vortices": {"positions": [[0.1, 0.2, 0.3], [0.5, 0.5]], "degrees": [1, -1]}})") ==
        "/vortices/positions/0");
  CHECK(schema_path(R"({"grid": {"n": 64}})") == "/vortices");
  CHECK(schema_path("{not json") == "/");
}

TEST_CASE("invariant violations are validation errors") {
  const std::string two_plus =
      R"({"vortices": {"positions": [[0.25, 0.5], [0.75, 0.5]], "degrees": [1, 1]}})";
  CHECK_THROWS_WITH_AS(parse_scenario(two_plus), "degrees sum to 2, expected 0", NonNeutralSource);
  CHECK_THROWS_AS(parse_scenario(with(R"("grid": {"n": 8})")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(R"({"vortices": {"positions": [[0.25, 0.5], [0.75, 0.5]],
                                      "degrees": [1, -1], "epsilon": 1.5}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_scenario(with(R"("structure": {"preset": "constant-randers",
                                          "params": [1.2, 0.0]})")),
                  InvalidStructure);
  CHECK_THROWS_AS(parse_scenario(with(R"("task": "randers-drift")")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(with(R"("structure": {"preset": "diagonal"},
                                          "task": "convergence")")),
                  ValidationError);
  CHECK_THROWS_AS(parse_scenario(with(R"("task": {"kind": "convergence", "grid_ladder": [32, 64]})")),
                  ValidationError);
}

TEST_CASE("echo round-trips") {
  const std::string full = R"({
    "spec_version": 1, "name": "rt",
    "structure": {"preset": "shear-randers", "params": [0.137], "measure": "busemann-hausdorff"},
    "grid": {"n": 96},
    "vortices": {"positions": [[0.1, 0.2], [0.6, 0.7], [0.3, 0.9], [0.85, 0.4]],
                 "degrees": [1, -1, 1, -1], "epsilon": 0.003, "alpha": 0.25, "C": 0.5},
    "task": {"kind": "flow", "t_max": 0.0123, "grad_tol": 1e-7, "rtol": 3e-5, "dt0": 2e-4,
             "adaptive": false, "law": "inverse-response", "t_list": [0.1, 0.05, 0.025, 0.0125],
             "probes": 5, "b_ladder": [0.3, 0.15, 0.075], "grid_ladder": [48, 96, 192]},
    "output": {"dir": "somewhere/else"},
    "seed": 18446744073709551615
  })";
  for (const std::string& doc : {kDipole, full}) {
    const Scenario s = parse_scenario(doc);
    const Scenario back = parse_scenario(scenario_json(s));
    CHECK(back == s);
    CHECK(scenario_json(back) == scenario_json(s));
  }
  CHECK(parse_scenario(full).seed == 18446744073709551615ull);
}

TEST_CASE("energy run on the antipodal dipole") {
  const fs::path dir = scratch("energy");
  Scenario s = parse_scenario(kDipole);
  const RunResult r = run_scenario(s, {1, 64, dir});
  REQUIRE(r.exit_code == 0);
  const auto j = summary(dir);
  CHECK(j["status"] == "ok");
  CHECK(j["library_version"] == std::string(library_version()));
  CHECK(j["wall_time_s"].get<double>() >= 0.0);
  CHECK(j["results"]["max_equilibrium_residual"].get<double>() <= 1e-4);
  CHECK(j["results"]["equilibrium"] == true);

  // The summary records the effective scenario, which re-parses.
  Scenario effective = s;
  effective.grid_n = 64;
  effective.out_dir = dir.string();
  CHECK(parse_scenario(j["scenario"].dump()) == effective);

  const std::string pairs = slurp(dir / "pairs.csv");
  CHECK(pairs.rfind("i,j,G_ij,contribution\n", 0) == 0);
  CHECK(std::count(pairs.begin(), pairs.end(), '\n') == 3);
  CHECK_FALSE(fs::exists(dir / "pairs.csv.tmp"));
}

TEST_CASE("flow run writes a decreasing trajectory") {
  const fs::path dir = scratch("flow");
  const Scenario s = parse_scenario(R"({
    "grid": {"n": 64},
    "vortices": {"positions": [[0.35, 0.5], [0.65, 0.5]], "degrees": [1, -1]},
    "task": {"kind": "flow", "t_max": 0.003, "dt0": 2e-4}
  })");
  REQUIRE(run_scenario(s, {1, 0, dir}).exit_code == 0);
  std::ifstream in(dir / "flow.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,i,x1,x2,d,W,grad_norm,diss_lhs,diss_rhs");
  std::vector<double> energies;
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    REQUIRE(cells.size() == 9);
    const bool first = std::stod(cells[0]) == 0.0;
    CHECK(cells[7].empty() == first);
    if (cells[1] == "0") energies.push_back(std::stod(cells[5]));
    ++rows;
  }
  CHECK(rows == 2 * static_cast<int>(energies.size()));
  REQUIRE(energies.size() >= 3);
  for (std::size_t k = 1; k < energies.size(); ++k) CHECK(energies[k] < energies[k - 1]);
  const auto j = summary(dir);
  CHECK(j["results"]["decreasing_fraction"] == 1.0);
  CHECK(j["results"]["termination"] == "max-time");
}

TEST_CASE("stability run writes the spectrum") {
  const fs::path dir = scratch("stability");
  const Scenario s = parse_scenario(with(R"("grid": {"n": 64}, "task": {"kind": "stability", "probes": 2})"));
  REQUIRE(run_scenario(s, {2, 0, dir}).exit_code == 0);
  const std::string spec = slurp(dir / "spectrum.csv");
  CHECK(spec.rfind("k,lambda\n", 0) == 0);
  CHECK(std::count(spec.begin(), spec.end(), '\n') == 5);
  const auto j = summary(dir);
  CHECK(j["results"]["zero_mode_count"] == 2);
  CHECK(j["results"]["expansion"].size() == 2);
  CHECK(fs::exists(dir / "expansion.csv"));
}

TEST_CASE("convergence run fits the kernel order") {
  const fs::path dir = scratch("convergence");
  const Scenario s = parse_scenario(R"({
    "vortices": {"positions": [[0.25, 0.125], [0.75, 0.5]], "degrees": [1, -1]},
    "task": {"kind": "convergence", "grid_ladder": [32, 64, 128]}
  })");
  REQUIRE(run_scenario(s, {1, 0, dir}).exit_code == 0);
  const double p = summary(dir)["results"]["order"].get<double>();
  CHECK(p >= 1.7);
  CHECK(p <= 2.3);
  CHECK(slurp(dir / "convergence.csv").rfind("n,h,defect\n", 0) == 0);
}

TEST_CASE("identical runs give identical CSV bytes") {
  const Scenario s = parse_scenario(R"({
    "grid": {"n": 64},
    "vortices": {"positions": [[0.3, 0.3], [0.72, 0.68]], "degrees": [1, -1]},
    "task": {"kind": "flow", "t_max": 0.002}
  })");
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run_scenario(s, {1, 0, a}).exit_code == 0);
  REQUIRE(run_scenario(s, {3, 0, b}).exit_code == 0);
  CHECK(slurp(a / "flow.csv") == slurp(b / "flow.csv"));
  CHECK_FALSE(slurp(a / "flow.csv").empty());
}

TEST_CASE("exit codes") {
  SUBCASE("grid too coarse for the regular part") {
    const fs::path dir = scratch("coarse");
    const RunResult r = run_scenario(parse_scenario(kDipole), {1, 32, dir});
    CHECK(r.exit_code == 2);
    const auto j = summary(dir);
    CHECK(j["status"] == "invalid");
    CHECK(j["error"]["type"] == "SeparationTooSmall");
    CHECK_FALSE(fs::exists(dir / "pairs.csv"));
  }
  SUBCASE("numerical failure keeps a diagnostic payload") {
    const fs::path dir = scratch("stall");
    const Scenario s = parse_scenario(R"({
      "structure": {"preset": "constant-randers", "params": [0.99, 0.0]},
      "grid": {"n": 64},
      "vortices": {"positions": [[0.3, 0.3], [0.72, 0.68]], "degrees": [1, -1]},
      "task": "stability"
    })");
    const RunResult r = run_scenario(s, {1, 0, dir});
    CHECK(r.exit_code == 3);
    const auto j = summary(dir);
    CHECK(j["status"] == "numerical-failure");
    CHECK(j["error"]["type"] == "NewtonStall");
    CHECK(j["error"].contains("last_residual"));
  }
  SUBCASE("unwritable output directory") {
    const fs::path dir = scratch("blocked");
    write_file_atomic(dir, "a file, not a directory\n");
    const RunResult r = run_scenario(parse_scenario(kDipole), {1, 64, dir / "out"});
    CHECK(r.exit_code == 2);
    CHECK(r.message.find(dir.string()) != std::string::npos);
  }
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}
