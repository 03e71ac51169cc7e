#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "fvortex/vortex_energy.hpp"

namespace fvortex {

enum class MobilityLaw {
  LegendreGradient,  // -L(dW_i)
  InverseResponse,   // -T_F(a_i, xi_i)^-1 dW_i
  AdditiveMobility,  // -(T_F(a_i, xi_i) + A_beta) dW_i
};

std::string_view law_name(MobilityLaw law);

/// Everything the integrator needs at one state.
struct FlowEvaluation {
  double energy = 0.0;
  std::vector<Vec2> covector;  // dW / da_i
  std::vector<Vec2> velocity;
  double rate = 0.0;           // sum_i <dW_i, velocity_i>
  double gradient_norm = 0.0;  // max_i F*(a_i, dW_i)
};

using FlowSystem = std::function<FlowEvaluation(const VortexConfiguration&)>;

/// Gradient flow of the renormalized energy under the given law.
FlowSystem finsler_flow_system(GreenSolver& solver, MobilityLaw law = MobilityLaw::LegendreGradient);

struct FlowOptions {
  double t_max = 0.1;
  double grad_tol = 1e-6;
  double rtol = 1e-6;
  double dt0 = 1e-4;
  bool adaptive = true;  // false: every step has length dt0 (the last one is clipped)
  std::size_t max_steps = 100000;
  double collapse_distance = 0.0;  // 0 selects 4h for solver-backed flows
};

inline constexpr double kMinStep = 1e-12;

enum class Termination { GradientBelowTol, MaxTime, PairCollapse };
std::string_view termination_name(Termination t);

struct StepAttempt {
  double t = 0.0;
  double dt = 0.0;
  double error = 0.0;
  bool accepted = false;
  bool energy_increase = false;
};

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<VortexConfiguration> states;
  std::vector<double> energies;
  std::vector<double> gradient_norms;
  // One entry per accepted step, ending at states[k + 1].
  std::vector<double> dissipation_lhs;  // (W_{k+1} - W_k) / dt
  std::vector<double> dissipation_rhs;  // rate at the midpoint state
  std::vector<StepAttempt> attempts;
  Termination termination = Termination::MaxTime;
  std::string note;

  std::size_t accepted_steps() const noexcept { return dissipation_lhs.size(); }
};

struct StepResult {
  VortexConfiguration config;
  FlowEvaluation end;
  double dt = 0.0;       // length of the accepted step
  double dt_next = 0.0;  // suggestion for the next one
  std::vector<StepAttempt> attempts;
};

/// One accepted Heun step with an Euler error estimate. Attempts that raise
/// the energy or exceed the tolerance are halved. Throws StepUnderflow and
/// PairCollapse.
StepResult flow_step(const FlowSystem& system, const VortexConfiguration& config,
                     const FlowEvaluation& start, double dt, const FlowOptions& options,
                     double t = 0.0);
VortexConfiguration flow_step(GreenSolver& solver, const VortexConfiguration& config, double dt);

FlowTrajectory run_flow(const FlowSystem& system, const VortexConfiguration& config,
                        const FlowOptions& options);
FlowTrajectory run_flow(GreenSolver& solver, const VortexConfiguration& config,
                        FlowOptions options, MobilityLaw law = MobilityLaw::LegendreGradient);

struct DissipationRow {
  std::size_t step = 0;
  double t = 0.0;
  double dt = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double defect = 0.0;  // |lhs - rhs| / |rhs|, or |lhs - rhs| when rhs vanishes
};

std::vector<DissipationRow> dissipation_check(const FlowTrajectory& trajectory);

/// Energy drop W_0 - W_end against the trapezoidal integral of -rate.
double integrated_dissipation_defect(const FlowTrajectory& trajectory);

Vec2 mobility_velocity(GreenSolver& solver, const VortexConfiguration& config, std::size_t i,
                       MobilityLaw law);

struct DriftDecomposition {
  std::vector<Vec2> isotropic;   // -a^-1 dW_alpha
  std::vector<Vec2> symmetric;   // S_beta(dW_alpha) dW_alpha
  std::vector<Vec2> transverse;  // A_beta a^-1 dW_alpha
  std::vector<Vec2> predicted;   // sum of the three
  std::vector<Vec2> measured;    // -L_F(dW_F) from the Randers pipeline
  std::vector<double> defect;    // |measured - predicted|
  std::vector<double> defect_without_transverse;
  double max_defect = 0.0;
  double max_defect_without_transverse = 0.0;
  double orthogonality = 0.0;  // max |<isotropic, transverse>| / (|isotropic| |transverse|)
};

/// First-order Randers velocity against the alpha-metric pipeline.
/// `alpha_solver` must be built on randers.alpha_part().
DriftDecomposition drift_decomposition(GreenSolver& randers_solver, GreenSolver& alpha_solver,
                                       const VortexConfiguration& config);

double min_separation(const VortexConfiguration& config);

}  // namespace fvortex
