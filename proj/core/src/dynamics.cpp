#include "fvortex/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {

std::string_view law_name(MobilityLaw law) {
  switch (law) {
    case MobilityLaw::LegendreGradient: return "legendre-gradient";
    case MobilityLaw::InverseResponse: return "inverse-response";
    case MobilityLaw::AdditiveMobility: return "additive-mobility";
  }
  return "unknown";
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::GradientBelowTol: return "gradient-below-tol";
    case Termination::MaxTime: return "max-time";
    case Termination::PairCollapse: return "pair-collapse";
  }
  return "unknown";
}

double min_separation(const VortexConfiguration& config) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < config.size(); ++i) {
    for (std::size_t j = i + 1; j < config.size(); ++j) {
      m = std::min(m, torus_separation(config.positions[i], config.positions[j]));
    }
  }
  return m;
}

namespace {

Vec2 law_velocity(const FinslerStructure& f, const Vec2& a, const Vec2& dw, const Vec2& xi,
                  MobilityLaw law) {
  if (dw.isZero()) return Vec2::Zero();
  switch (law) {
    case MobilityLaw::LegendreGradient: return -legendre_map(f, a, dw);
    case MobilityLaw::InverseResponse: return -(mobility_inverse(f, a, xi) * dw);
    case MobilityLaw::AdditiveMobility: return -(mobility_additive(f, a, xi) * dw);
  }
  return Vec2::Zero();
}

}  // namespace

FlowSystem finsler_flow_system(GreenSolver& solver, MobilityLaw law) {
  return [&solver, law](const VortexConfiguration& c) {
    EnergyModel model(solver);
    const FinslerStructure& f = solver.structure();
    FlowEvaluation e;
    e.energy = model.energy(c);
    e.covector = model.euclidean_gradient(c);
    std::vector<Vec2> xi;
    if (law != MobilityLaw::LegendreGradient) xi = model.interaction_covectors(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Vec2& a = c.positions[i];
      const Vec2 v = law_velocity(f, a, e.covector[i], xi.empty() ? e.covector[i] : xi[i], law);
      e.velocity.push_back(v);
      e.rate += e.covector[i].dot(v);
      e.gradient_norm = std::max(e.gradient_norm, dual_norm(f, a, e.covector[i]));
    }
    return e;
  };
}

StepResult flow_step(const FlowSystem& system, const VortexConfiguration& config,
                     const FlowEvaluation& start, double dt, const FlowOptions& options,
                     double t) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  const Eigen::VectorXd x0 = stack_positions(config);
  const Eigen::VectorXd k1 = stack(start.velocity);
  const double tol = options.rtol * std::max(1.0, x0.cwiseAbs().maxCoeff());
  auto check_collapse = [&](const VortexConfiguration& c) {
    const double sep = min_separation(c);
    if (options.collapse_distance > 0.0 && sep < options.collapse_distance) {
      throw PairCollapse(fmt::format("pair separation {:.4g} below {:.4g} at t = {:.6g}", sep,
                                     options.collapse_distance, t));
    }
  };

  StepResult out;
  while (true) {
    if (dt < kMinStep) {
      throw StepUnderflow(fmt::format("step size {:.3g} below {:.0e} at t = {:.6g}", dt,
                                      kMinStep, t));
    }
    StepAttempt attempt;
    attempt.t = t;
    attempt.dt = dt;

    const VortexConfiguration predictor = with_positions(config, x0 + dt * k1);
    check_collapse(predictor);
    const FlowEvaluation ep = system(predictor);
    const Eigen::VectorXd k2 = stack(ep.velocity);
    const VortexConfiguration next = with_positions(config, x0 + 0.5 * dt * (k1 + k2));
    check_collapse(next);
    FlowEvaluation en = system(next);

    attempt.error = 0.5 * dt * (k2 - k1).cwiseAbs().maxCoeff();
    // A step that does not move cannot lower the energy and needs no check.
    const bool moved = (stack_positions(next) - x0).cwiseAbs().maxCoeff() > 0.0;
    attempt.energy_increase = moved && !(en.energy < start.energy);
    const bool too_large = options.adaptive && attempt.error > tol;
    if (attempt.energy_increase || too_large) {
      out.attempts.push_back(attempt);
      dt *= 0.5;
      continue;
    }
    attempt.accepted = true;
    out.attempts.push_back(attempt);
    out.config = next;
    out.end = std::move(en);
    out.dt = dt;
    if (options.adaptive) {
      const double factor = attempt.error > 0.0 ? 0.9 * std::sqrt(tol / attempt.error) : 2.0;
      out.dt_next = dt * std::clamp(factor, 0.2, 2.0);
    } else {
      out.dt_next = options.dt0;
    }
    return out;
  }
}

VortexConfiguration flow_step(GreenSolver& solver, const VortexConfiguration& config, double dt) {
  const FlowSystem system = finsler_flow_system(solver);
  FlowOptions options;
  options.collapse_distance = 4.0 * solver.grid().h();
  const FlowEvaluation start = system(config);
  return flow_step(system, config, start, dt, options).config;
}

FlowTrajectory run_flow(const FlowSystem& system, const VortexConfiguration& config,
                        const FlowOptions& options) {
  if (!(options.t_max > 0.0) || !(options.dt0 > 0.0) || !(options.rtol > 0.0)) {
    throw ValidationError("t_max, dt0 and rtol must be positive");
  }
  FlowTrajectory traj;
  VortexConfiguration c = config;
  FlowEvaluation e = system(c);
  double t = 0.0;
  auto record = [&] {
    traj.times.push_back(t);
    traj.states.push_back(c);
    traj.energies.push_back(e.energy);
    traj.gradient_norms.push_back(e.gradient_norm);
  };
  record();
  if (e.gradient_norm <= options.grad_tol) {
    traj.termination = Termination::GradientBelowTol;
    return traj;
  }
  double dt = options.dt0;
  const double t_end = options.t_max * (1.0 - 1e-12);
  for (std::size_t step = 0;; ++step) {
    if (t >= t_end) {
      traj.termination = Termination::MaxTime;
      break;
    }
    if (step == options.max_steps) {
      traj.termination = Termination::MaxTime;
      traj.note = fmt::format("step limit {} reached at t = {:.6g}", options.max_steps, t);
      break;
    }
    StepResult r;
    try {
      r = flow_step(system, c, e, std::min(dt, options.t_max - t), options, t);
    } catch (const PairCollapse& ex) {
      traj.termination = Termination::PairCollapse;
      traj.note = ex.what();
      break;
    }
    traj.attempts.insert(traj.attempts.end(), r.attempts.begin(), r.attempts.end());
    const Eigen::VectorXd mid = 0.5 * (stack_positions(c) + stack_positions(r.config));
    const FlowEvaluation em = system(with_positions(c, mid));
    traj.dissipation_lhs.push_back((r.end.energy - e.energy) / r.dt);
    traj.dissipation_rhs.push_back(em.rate);
    t += r.dt;
    c = std::move(r.config);
    e = std::move(r.end);
    record();
    dt = r.dt_next;
    if (e.gradient_norm <= options.grad_tol) {
      traj.termination = Termination::GradientBelowTol;
      break;
    }
  }
  return traj;
}

FlowTrajectory run_flow(GreenSolver& solver, const VortexConfiguration& config,
                        FlowOptions options, MobilityLaw law) {
  if (options.collapse_distance <= 0.0) options.collapse_distance = 4.0 * solver.grid().h();
  return run_flow(finsler_flow_system(solver, law), config, options);
}

std::vector<DissipationRow> dissipation_check(const FlowTrajectory& trajectory) {
  std::vector<DissipationRow> rows;
  for (std::size_t k = 0; k < trajectory.accepted_steps(); ++k) {
    DissipationRow row;
    row.step = k;
    row.t = trajectory.times[k];
    row.dt = trajectory.times[k + 1] - trajectory.times[k];
    row.lhs = trajectory.dissipation_lhs[k];
    row.rhs = trajectory.dissipation_rhs[k];
    const double diff = std::abs(row.lhs - row.rhs);
    row.defect = row.rhs != 0.0 ? diff / std::abs(row.rhs) : diff;
    rows.push_back(row);
  }
  return rows;
}

double integrated_dissipation_defect(const FlowTrajectory& trajectory) {
  if (trajectory.accepted_steps() == 0) return 0.0;
  const double drop = trajectory.energies.front() - trajectory.energies.back();
  double integral = 0.0;
  for (const DissipationRow& row : dissipation_check(trajectory)) integral -= row.dt * row.rhs;
  if (drop == 0.0) return std::abs(integral);
  return std::abs(drop - integral) / std::abs(drop);
}

Vec2 mobility_velocity(GreenSolver& solver, const VortexConfiguration& config, std::size_t i,
                       MobilityLaw law) {
  if (i >= config.size()) throw ValidationError(fmt::format("no vortex {}", i));
  EnergyModel model(solver);
  const Vec2 dw = model.euclidean_gradient(config)[i];
  const Vec2 xi = law == MobilityLaw::LegendreGradient ? dw : model.interaction_covectors(config)[i];
  return law_velocity(solver.structure(), config.positions[i], dw, xi, law);
}

DriftDecomposition drift_decomposition(GreenSolver& randers_solver, GreenSolver& alpha_solver,
                                       const VortexConfiguration& config) {
  const FinslerStructure& f = randers_solver.structure();
  if (f.kind() != MetricKind::Randers) throw NotRanders("drift decomposition needs a Randers structure");
  if (alpha_solver.structure().kind() != MetricKind::Riemannian) {
    throw ValidationError("the companion solver must carry the alpha metric");
  }
  const std::vector<Vec2> xa = EnergyModel(alpha_solver).euclidean_gradient(config);
  const std::vector<Vec2> xf = EnergyModel(randers_solver).euclidean_gradient(config);

  DriftDecomposition d;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const Vec2& a = config.positions[i];
    const DualNorm dn = dual_norm_at(f, a);
    const Mat2& p = dn.alpha_inverse();
    const Vec2 grad_alpha = p * xa[i];
    const Vec2 iso = -grad_alpha;
    const Vec2 sym =
        xa[i].isZero() ? Vec2::Zero() : Vec2(symmetric_correction(p, dn.beta(), xa[i]) * xa[i]);
    const Vec2 trans = antisymmetric_part(f, a) * grad_alpha;
    const Vec2 measured = xf[i].isZero() ? Vec2::Zero() : Vec2(-legendre_map(f, a, xf[i]));
    d.isotropic.push_back(iso);
    d.symmetric.push_back(sym);
    d.transverse.push_back(trans);
    d.predicted.push_back(iso + sym + trans);
    d.measured.push_back(measured);
    d.defect.push_back((measured - d.predicted.back()).norm());
    d.defect_without_transverse.push_back((measured - iso - sym).norm());
    d.max_defect = std::max(d.max_defect, d.defect.back());
    d.max_defect_without_transverse =
        std::max(d.max_defect_without_transverse, d.defect_without_transverse.back());
    const double scale = iso.norm() * trans.norm();
    if (scale > 0.0) d.orthogonality = std::max(d.orthogonality, std::abs(iso.dot(trans)) / scale);
  }
  return d;
}

}  // namespace fvortex
