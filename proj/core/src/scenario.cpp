#include "fvortex/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "fvortex/errors.hpp"
#include "fvortex/green_kernel.hpp"
#include "fvortex/oracle/order_fit.hpp"
#include "fvortex/oracle/spectral_green.hpp"
#include "fvortex/report_io.hpp"
#include "fvortex/stability.hpp"

namespace fvortex {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::pair<Task, std::string_view>, 5> kTasks{{
    {Task::Energy, "energy"},
    {Task::Stability, "stability"},
    {Task::Flow, "flow"},
    {Task::RandersDrift, "randers-drift"},
    {Task::Convergence, "convergence"},
}};

constexpr std::array<MobilityLaw, 3> kLaws{MobilityLaw::LegendreGradient,
                                           MobilityLaw::InverseResponse,
                                           MobilityLaw::AdditiveMobility};

constexpr std::array<MeasureKind, 2> kMeasures{MeasureKind::HolmesThompson,
                                               MeasureKind::BusemannHausdorff};

std::string join_names(const std::vector<std::string_view>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

template <class T, class Range, class NameFn>
T lookup(const Range& range, NameFn name, std::string_view key, const std::string& path) {
  std::vector<std::string_view> known;
  for (const auto& item : range) {
    if (name(item) == key) return item;
    known.push_back(name(item));
  }
  throw SchemaError(path, fmt::format("unknown name \"{}\" (expected one of: {})", key,
                                      join_names(known)));
}

std::string type_name(const Json& v) { return v.type_name(); }

double get_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number, got " + type_name(v));
  return v.get<double>();
}

long long get_integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer, got " + type_name(v));
  return v.get<long long>();
}

bool get_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path, "expected a boolean, got " + type_name(v));
  return v.get<bool>();
}

std::string get_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string, got " + type_name(v));
  return v.get<std::string>();
}

const Json& get_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array, got " + type_name(v));
  return v;
}

std::vector<double> get_numbers(const Json& v, const std::string& path) {
  std::vector<double> out;
  const Json& a = get_array(v, path);
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(get_number(a[k], fmt::format("{}/{}", path, k)));
  return out;
}

std::vector<int> get_integers(const Json& v, const std::string& path) {
  std::vector<int> out;
  const Json& a = get_array(v, path);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::string p = fmt::format("{}/{}", path, k);
    const long long x = get_integer(a[k], p);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      throw SchemaError(p, "integer out of range");
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

// Object reader that rejects keys nobody asked for.
class Object {
 public:
  Object(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw SchemaError(path_.empty() ? "/" : path_, "expected an object, got " + type_name(j_));
    }
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw SchemaError(path(key), "required key is missing");
    return *v;
  }

  std::string path(const std::string& key) const { return path_ + "/" + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw SchemaError(path(item.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const PresetInfo& preset_info(Preset p) {
  for (const PresetInfo& info : preset_catalog()) {
    if (info.preset == p) return info;
  }
  throw ValidationError("unregistered preset");
}

void parse_structure(const Json& j, Scenario& s) {
  Object o(j, "/structure");
  const PresetInfo& info = lookup<PresetInfo>(
      preset_catalog(), [](const PresetInfo& p) { return p.name; },
      get_string(o.require("preset"), o.path("preset")), o.path("preset"));
  s.structure.preset = info.preset;
  s.structure.params = info.defaults;
  if (const Json* v = o.find("params")) s.structure.params = get_numbers(*v, o.path("params"));
  if (s.structure.params.size() != info.defaults.size()) {
    throw SchemaError(o.path("params"), fmt::format("preset {} takes {} parameters, got {}",
                                                    info.name, info.defaults.size(),
                                                    s.structure.params.size()));
  }
  if (const Json* v = o.find("measure")) {
    s.structure.measure = lookup<MeasureKind>(kMeasures, measure_name,
                                              get_string(*v, o.path("measure")), o.path("measure"));
  }
  o.finish();
}

void parse_vortices(const Json& j, Scenario& s) {
  Object o(j, "/vortices");
  const std::string ppath = o.path("positions");
  const Json& pos = get_array(o.require("positions"), ppath);
  s.positions.clear();
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const std::string p = fmt::format("{}/{}", ppath, k);
    const std::vector<double> xy = get_numbers(pos[k], p);
    if (xy.size() != 2) throw SchemaError(p, "a position has two coordinates");
    s.positions.push_back({xy[0], xy[1]});
  }
  s.degrees = get_integers(o.require("degrees"), o.path("degrees"));
  if (const Json* v = o.find("epsilon")) s.epsilon = get_number(*v, o.path("epsilon"));
  if (const Json* v = o.find("alpha")) s.separation_exponent = get_number(*v, o.path("alpha"));
  if (const Json* v = o.find("C")) s.separation_constant = get_number(*v, o.path("C"));
  o.finish();
}

void parse_task(const Json& j, Scenario& s) {
  auto task_from = [&](const Json& v, const std::string& path) {
    return lookup<std::pair<Task, std::string_view>>(
               kTasks, [](const auto& t) { return t.second; }, get_string(v, path), path)
        .first;
  };
  if (j.is_string()) {
    s.task = task_from(j, "/task");
    return;
  }
  Object o(j, "/task");
  if (const Json* v = o.find("kind")) s.task = task_from(*v, o.path("kind"));
  if (const Json* v = o.find("t_max")) s.t_max = get_number(*v, o.path("t_max"));
  if (const Json* v = o.find("grad_tol")) s.grad_tol = get_number(*v, o.path("grad_tol"));
  if (const Json* v = o.find("rtol")) s.rtol = get_number(*v, o.path("rtol"));
  if (const Json* v = o.find("dt0")) s.dt0 = get_number(*v, o.path("dt0"));
  if (const Json* v = o.find("adaptive")) s.adaptive = get_bool(*v, o.path("adaptive"));
  if (const Json* v = o.find("law")) {
    s.law = lookup<MobilityLaw>(kLaws, law_name, get_string(*v, o.path("law")), o.path("law"));
  }
  if (const Json* v = o.find("t_list")) s.t_list = get_numbers(*v, o.path("t_list"));
  if (const Json* v = o.find("probes")) s.probes = static_cast<int>(get_integer(*v, o.path("probes")));
  if (const Json* v = o.find("b_ladder")) s.b_ladder = get_numbers(*v, o.path("b_ladder"));
  if (const Json* v = o.find("grid_ladder")) s.grid_ladder = get_integers(*v, o.path("grid_ladder"));
  o.finish();
}

bool all_positive(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x > 0.0; });
}

bool is_randers(Preset p) { return p == Preset::ConstantRanders || p == Preset::ShearRanders; }

std::vector<std::string> validate_scenario(const Scenario& s) {
  if (s.grid_n < kMinGrid) {
    throw ValidationError(fmt::format("grid n = {} below the minimum {}", s.grid_n, kMinGrid));
  }
  const FinslerStructure f = build_structure(s.structure);
  std::vector<std::string> warnings = validate_configuration(configuration(s), f);
  if (!(s.t_max > 0.0) || !(s.grad_tol > 0.0) || !(s.rtol > 0.0) || !(s.dt0 > 0.0)) {
    throw ValidationError("t_max, grad_tol, rtol and dt0 must be positive");
  }
  if (s.t_list.empty() || !all_positive(s.t_list)) {
    throw ValidationError("t_list must hold positive steps");
  }
  if (s.probes < 1) throw ValidationError("probes must be at least 1");
  switch (s.task) {
    case Task::RandersDrift:
      if (!is_randers(s.structure.preset)) {
        throw ValidationError("the randers-drift task needs a Randers preset");
      }
      if (s.b_ladder.size() < 3 || !all_positive(s.b_ladder)) {
        throw ValidationError("b_ladder needs at least three positive entries");
      }
      if (s.structure.preset == Preset::ConstantRanders &&
          std::hypot(s.structure.params[0], s.structure.params[1]) == 0.0) {
        throw ValidationError("constant-randers drift needs a nonzero direction in params");
      }
      for (double b : s.b_ladder) {
        if (b >= 1.0) throw ValidationError(fmt::format("b = {} violates |b| < 1", b));
      }
      break;
    case Task::Convergence:
      if (s.structure.preset != Preset::Identity) {
        throw ValidationError("the convergence task compares against the identity oracle");
      }
      if (s.grid_ladder.size() < 3) {
        throw ValidationError("grid_ladder needs at least three grids");
      }
      for (int n : s.grid_ladder) {
        if (n < kMinGrid) {
          throw ValidationError(fmt::format("grid n = {} below the minimum {}", n, kMinGrid));
        }
      }
      break;
    default:
      break;
  }
  return warnings;
}

Json to_json(const Scenario& s) {
  Json j;
  j["spec_version"] = s.spec_version;
  j["name"] = s.name;
  j["structure"] = {{"preset", preset_name(s.structure.preset)},
                    {"params", s.structure.params},
                    {"measure", measure_name(s.structure.measure)}};
  j["grid"] = {{"n", s.grid_n}};
  Json pos = Json::array();
  for (const auto& p : s.positions) pos.push_back({p[0], p[1]});
  j["vortices"] = {{"positions", pos},
                   {"degrees", s.degrees},
                   {"epsilon", s.epsilon},
                   {"alpha", s.separation_exponent},
                   {"C", s.separation_constant}};
  j["task"] = {{"kind", task_name(s.task)},  {"t_max", s.t_max},   {"grad_tol", s.grad_tol},
               {"rtol", s.rtol},             {"dt0", s.dt0},       {"adaptive", s.adaptive},
               {"law", law_name(s.law)},     {"t_list", s.t_list}, {"probes", s.probes},
               {"b_ladder", s.b_ladder},     {"grid_ladder", s.grid_ladder}};
  j["output"] = {{"dir", s.out_dir}};
  j["seed"] = s.seed;
  return j;
}

// JSON has no infinities; they are reported as null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec(const Vec2& v) { return Json::array({num(v[0]), num(v[1])}); }

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

struct Output {
  std::vector<std::pair<std::string, std::string>> files;
};

std::shared_ptr<const TorusGrid> make_grid(const FinslerStructure& f, int n) {
  return std::make_shared<TorusGrid>(f, n);
}

Json energy_task(const Scenario& s, int threads, Output& out) {
  GreenSolver solver(make_grid(build_structure(s.structure), s.grid_n), {}, threads);
  EnergyModel model(solver);
  const VortexConfiguration config = configuration(s);
  const EnergyReport rep = model.report(config, true, false);
  Json vortices = Json::array();
  for (std::size_t i = 0; i < config.size(); ++i) {
    vortices.push_back({{"i", i},
                        {"position", vec(config.positions[i])},
                        {"degree", config.degrees[i]},
                        {"regular_value", num(rep.regular_values[i])},
                        {"self_energy", num(rep.self_energy[i])},
                        {"euclidean_gradient", vec(rep.euclidean_gradient[i])},
                        {"gradient", vec(rep.gradient[i])},
                        {"equilibrium_residual", num(rep.equilibrium_residual[i])}});
  }
  out.files.emplace_back("pairs.csv", pairs_csv(rep));
  return {{"energy", num(rep.energy)},
          {"predicted_total", num(rep.predicted_total)},
          {"max_equilibrium_residual", num(max_of(rep.equilibrium_residual))},
          {"equilibrium", rep.equilibrium},
          {"vortices", vortices},
          {"solves", solver.solves()}};
}

Json stability_task(const Scenario& s, int threads, Output& out) {
  const FinslerStructure f = build_structure(s.structure);
  GreenSolver solver(make_grid(f, s.grid_n), {}, threads);
  EnergyModel model(solver);
  const VortexConfiguration config = configuration(s);
  const EnergyReport rep = model.report(config, true, true);
  std::vector<bool> fallback;
  auto blocks = cometric_blocks(f, config, rep.interaction_covector, &fallback);
  StabilityReport st = stability_spectrum(rep.hessian, std::move(blocks));
  st.metric_fallback = fallback;
  out.files.emplace_back("spectrum.csv", spectrum_csv(st));

  Json eig = Json::array();
  for (Eigen::Index k = 0; k < st.eigenvalues.size(); ++k) eig.push_back(num(st.eigenvalues[k]));
  Json result{{"energy", num(rep.energy)},
              {"equilibrium", rep.equilibrium},
              {"max_equilibrium_residual", num(max_of(rep.equilibrium_residual))},
              {"eigenvalues", eig},
              {"tol_zero", num(st.tol_zero)},
              {"zero_mode_count", st.zero_mode_count},
              {"stable", st.stable},
              {"reconstruction_error", num(st.reconstruction_error)},
              {"hessian_asymmetry", num(rep.hessian_asymmetry)}};

  // The expansion check is only meaningful at a stationary point.
  if (!rep.equilibrium) {
    result["expansion"] = nullptr;
    return result;
  }
  std::string csv = "probe,t,remainder,quadratic,increment\n";
  Json probes = Json::array();
  for (int p = 0; p < s.probes; ++p) {
    const auto v = random_admissible(config, s.seed + static_cast<std::uint64_t>(p));
    const ExpansionCheck ec = quadratic_expansion_check(solver, config, v, s.t_list, &rep.hessian);
    for (std::size_t k = 0; k < ec.steps.size(); ++k) {
      csv += fmt::format("{},{},{},{},{}\n", p, format_number(ec.steps[k]),
                         format_number(ec.remainders[k]), format_number(ec.quadratic[k]),
                         format_number(ec.increments[k]));
    }
    probes.push_back({{"probe", p}, {"order", num(ec.order)}, {"exact", ec.exact}});
  }
  out.files.emplace_back("expansion.csv", std::move(csv));
  result["expansion"] = probes;
  return result;
}

Json flow_task(const Scenario& s, int threads, Output& out) {
  GreenSolver solver(make_grid(build_structure(s.structure), s.grid_n), {}, threads);
  FlowOptions opt;
  opt.t_max = s.t_max;
  opt.grad_tol = s.grad_tol;
  opt.rtol = s.rtol;
  opt.dt0 = s.dt0;
  opt.adaptive = s.adaptive;
  const FlowTrajectory traj = run_flow(solver, configuration(s), opt, s.law);
  out.files.emplace_back("flow.csv", flow_csv(traj));

  std::size_t decreasing = 0;
  for (std::size_t k = 0; k + 1 < traj.energies.size(); ++k) {
    if (traj.energies[k + 1] < traj.energies[k]) ++decreasing;
  }
  std::size_t rejected = 0;
  for (const StepAttempt& a : traj.attempts) rejected += a.accepted ? 0 : 1;
  double worst = 0.0;
  for (const DissipationRow& r : dissipation_check(traj)) worst = std::max(worst, r.defect);
  Json final_positions = Json::array();
  for (const Vec2& p : traj.states.back().positions) final_positions.push_back(vec(p));
  const std::size_t steps = traj.accepted_steps();
  return {{"termination", termination_name(traj.termination)},
          {"note", traj.note},
          {"accepted_steps", steps},
          {"rejected_attempts", rejected},
          {"t_final", num(traj.times.back())},
          {"energy_initial", num(traj.energies.front())},
          {"energy_final", num(traj.energies.back())},
          {"gradient_norm_final", num(traj.gradient_norms.back())},
          {"decreasing_fraction", steps ? static_cast<double>(decreasing) / steps : 1.0},
          {"max_dissipation_defect", num(worst)},
          {"integrated_dissipation_defect", num(integrated_dissipation_defect(traj))},
          {"final_positions", final_positions}};
}

Json drift_task(const Scenario& s, int threads, Output& out) {
  const VortexConfiguration config = configuration(s);
  const FinslerStructure base = build_structure(s.structure);
  GreenSolver alpha(make_grid(base.alpha_part(), s.grid_n), {}, threads);

  std::string csv = "b,i,measured_1,measured_2,predicted_1,predicted_2,defect\n";
  Json rungs = Json::array();
  std::vector<std::pair<double, double>> full, partial;
  for (double b : s.b_ladder) {
    StructureSpec spec = s.structure;
    if (spec.preset == Preset::ConstantRanders) {
      const double len = std::hypot(spec.params[0], spec.params[1]);
      spec.params = {b * spec.params[0] / len, b * spec.params[1] / len};
    } else {
      spec.params = {b};
    }
    GreenSolver randers(make_grid(build_structure(spec), s.grid_n), {}, threads);
    const DriftDecomposition d = drift_decomposition(randers, alpha, config);
    for (std::size_t i = 0; i < config.size(); ++i) {
      csv += fmt::format("{},{},{},{},{},{},{}\n", format_number(b), i,
                         format_number(d.measured[i][0]), format_number(d.measured[i][1]),
                         format_number(d.predicted[i][0]), format_number(d.predicted[i][1]),
                         format_number(d.defect[i]));
    }
    full.emplace_back(b, d.max_defect);
    partial.emplace_back(b, d.max_defect_without_transverse);
    rungs.push_back({{"b", b},
                     {"max_defect", num(d.max_defect)},
                     {"max_defect_without_transverse", num(d.max_defect_without_transverse)},
                     {"orthogonality", num(d.orthogonality)}});
  }
  out.files.emplace_back("drift.csv", std::move(csv));
  return {{"ladder", rungs},
          {"order", num(oracle::order_fit(full))},
          {"order_without_transverse", num(oracle::order_fit(partial))}};
}

Json convergence_task(const Scenario& s, int threads, Output& out) {
  std::string csv = "n,h,defect\n";
  Json rungs = Json::array();
  std::vector<std::pair<double, double>> ladder;
  for (int n : s.grid_ladder) {
    GreenSolver solver(make_grid(FinslerStructure::identity(s.structure.measure), n), {}, threads);
    const TorusGrid& g = solver.grid();
    // The source is snapped to the nearest node so every grid sees an exact
    // point source.
    const int ix = static_cast<int>(std::lround(s.positions[0][0] * n)) % n;
    const int iy = static_cast<int>(std::lround(s.positions[0][1] * n)) % n;
    const Vec2 y = g.node((ix + n) % n, (iy + n) % n);
    const auto field = solver.field(y);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < field->size(); ++k) {
      const Vec2 x = g.node(static_cast<std::size_t>(k));
      if (torus_separation(x, y) < 4.0 * g.h() - 1e-12) continue;
      worst = std::max(worst, std::abs((*field)[k] - oracle::iso_green(x, y)));
    }
    csv += fmt::format("{},{},{}\n", n, format_number(g.h()), format_number(worst));
    ladder.emplace_back(g.h(), worst);
    rungs.push_back({{"n", n}, {"h", g.h()}, {"defect", num(worst)}});
  }
  out.files.emplace_back("convergence.csv", std::move(csv));
  return {{"ladder", rungs}, {"order", num(oracle::order_fit(ladder))}};
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
  if (dynamic_cast<const NonNeutralSource*>(&e)) return "NonNeutralSource";
  if (dynamic_cast<const SeparationTooSmall*>(&e)) return "SeparationTooSmall";
  if (dynamic_cast<const InvalidStructure*>(&e)) return "InvalidStructure";
  if (dynamic_cast<const NotStationary*>(&e)) return "NotStationary";
  if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const NewtonStall*>(&e)) return "NewtonStall";
  if (dynamic_cast<const SolverDiverged*>(&e)) return "SolverDiverged";
  if (dynamic_cast<const GramNotPD*>(&e)) return "GramNotPD";
  if (dynamic_cast<const StepUnderflow*>(&e)) return "StepUnderflow";
  if (dynamic_cast<const PairCollapse*>(&e)) return "PairCollapse";
  if (dynamic_cast<const FitDiverged*>(&e)) return "FitDiverged";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  return "InternalError";
}

Json error_payload(const std::exception& e) {
  Json j{{"type", error_kind(e)}, {"message", e.what()}};
  if (const auto* x = dynamic_cast<const SchemaError*>(&e)) j["path"] = x->path();
  if (const auto* x = dynamic_cast<const NewtonStall*>(&e)) j["last_residual"] = num(x->last_residual());
  if (const auto* x = dynamic_cast<const GramNotPD*>(&e)) j["vortex"] = x->vortex();
  return j;
}

}  // namespace

std::string_view library_version() { return FVORTEX_VERSION; }

std::string_view task_name(Task t) {
  for (const auto& [task, name] : kTasks) {
    if (task == t) return name;
  }
  return "unknown";
}

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> catalog{
      {Preset::Identity, "identity", {}, {}, "Euclidean metric a = I"},
      {Preset::Diagonal, "diagonal", {"l1", "l2"}, {4.0, 1.0}, "constant a = diag(l1, l2)"},
      {Preset::ConstantRanders, "constant-randers", {"b1", "b2"}, {0.2, 0.0},
       "a = I with constant drift b = (b1, b2)"},
      {Preset::ShearRanders, "shear-randers", {"kappa"}, {0.2},
       "a = I with b = (0, kappa sin(2 pi x1) / (2 pi))"},
      {Preset::Modulated, "modulated", {"amplitude"}, {0.2},
       "smooth position-dependent Riemannian a(x)"},
  };
  return catalog;
}

FinslerStructure build_structure(const StructureSpec& spec) {
  const auto& p = spec.params;
  const std::size_t expected = preset_info(spec.preset).defaults.size();
  if (p.size() != expected) {
    throw InvalidStructure(fmt::format("preset {} takes {} parameters, got {}",
                                       preset_name(spec.preset), expected, p.size()));
  }
  switch (spec.preset) {
    case Preset::Identity: return FinslerStructure::identity(spec.measure);
    case Preset::Diagonal: return FinslerStructure::diagonal(p[0], p[1], spec.measure);
    case Preset::ConstantRanders: return FinslerStructure::constant_randers(p[0], p[1], spec.measure);
    case Preset::ShearRanders: return FinslerStructure::shear_randers(p[0], spec.measure);
    case Preset::Modulated: return FinslerStructure::modulated(p[0], spec.measure);
  }
  throw InvalidStructure("unknown preset");
}

VortexConfiguration configuration(const Scenario& s) {
  VortexConfiguration c;
  for (const auto& p : s.positions) c.positions.emplace_back(p[0], p[1]);
  c.degrees = s.degrees;
  c.epsilon = s.epsilon;
  c.separation_exponent = s.separation_exponent;
  c.separation_constant = s.separation_constant;
  return c;
}

Scenario parse_scenario(std::string_view document) {
  Json j;
  try {
    j = Json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("/", e.what());
  }
  Scenario s;
  Object o(j, "");
  if (const Json* v = o.find("spec_version")) {
    s.spec_version = static_cast<int>(get_integer(*v, "/spec_version"));
    if (s.spec_version != kScenarioVersion) {
      throw SchemaError("/spec_version", fmt::format("unsupported version {}, this build reads {}",
                                                     s.spec_version, kScenarioVersion));
    }
  }
  if (const Json* v = o.find("name")) s.name = get_string(*v, "/name");
  if (const Json* v = o.find("structure")) parse_structure(*v, s);
  if (const Json* v = o.find("grid")) {
    Object g(*v, "/grid");
    if (const Json* n = g.find("n")) s.grid_n = static_cast<int>(get_integer(*n, "/grid/n"));
    g.finish();
  }
  parse_vortices(o.require("vortices"), s);
  if (const Json* v = o.find("task")) parse_task(*v, s);
  if (const Json* v = o.find("output")) {
    Object out(*v, "/output");
    if (const Json* d = out.find("dir")) s.out_dir = get_string(*d, "/output/dir");
    out.finish();
  }
  if (const Json* v = o.find("seed")) {
    if (!v->is_number_unsigned()) throw SchemaError("/seed", "expected a nonnegative integer");
    s.seed = v->get<std::uint64_t>();
  }
  o.finish();
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open scenario");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_json(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

RunResult run_scenario(const Scenario& input, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Scenario s = input;
  if (options.grid_override > 0) s.grid_n = options.grid_override;
  if (!options.out_dir.empty()) s.out_dir = options.out_dir.string();
  const int threads = std::max(1, options.threads);

  RunResult result;
  result.out_dir = s.out_dir;
  Json summary;
  summary["library_version"] = library_version();
  summary["scenario"] = to_json(s);
  Output out;
  try {
    const std::vector<std::string> warnings = validate_scenario(s);
    summary["warnings"] = warnings;
    Json r;
    switch (s.task) {
      case Task::Energy: r = energy_task(s, threads, out); break;
      case Task::Stability: r = stability_task(s, threads, out); break;
      case Task::Flow: r = flow_task(s, threads, out); break;
      case Task::RandersDrift: r = drift_task(s, threads, out); break;
      case Task::Convergence: r = convergence_task(s, threads, out); break;
    }
    summary["status"] = "ok";
    summary["results"] = std::move(r);
  } catch (const ValidationError& e) {
    result.exit_code = 2;
    result.message = e.what();
    summary["status"] = "invalid";
    summary["error"] = error_payload(e);
  } catch (const std::exception& e) {
    result.exit_code = 3;
    result.message = e.what();
    summary["status"] = "numerical-failure";
    summary["error"] = error_payload(e);
  }
  if (result.exit_code != 0) out.files.clear();
  summary["threads"] = threads;
  summary["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    const std::filesystem::path dir = s.out_dir;
    for (const auto& [name, content] : out.files) {
      write_file_atomic(dir / name, content);
      result.files.push_back(dir / name);
    }
    // Written last, so its presence marks a complete run.
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    result.files.push_back(dir / "summary.json");
  } catch (const IoError& e) {
    if (result.exit_code == 0) result.exit_code = 2;
    result.message = e.what();
  }
  return result;
}

}  // namespace fvortex
