#include "fvortex/vortex_energy.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/LU>
#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {

std::vector<std::string> validate_configuration(const VortexConfiguration& config,
                                                const FinslerStructure& structure) {
  const std::size_t n = config.size();
  if (n != config.degrees.size()) {
    throw ValidationError(fmt::format("{} positions but {} degrees", n, config.degrees.size()));
  }
  if (n < 2) throw ValidationError("a configuration needs at least two vortices");
  for (std::size_t i = 0; i < n; ++i) {
    if (config.degrees[i] == 0) throw ValidationError(fmt::format("vortex {} has degree 0", i));
    if (!config.positions[i].allFinite()) {
      throw ValidationError(fmt::format("vortex {} has a non-finite position", i));
    }
  }
  const int total = std::accumulate(config.degrees.begin(), config.degrees.end(), 0);
  if (total != 0) {
    throw NonNeutralSource(fmt::format("degrees sum to {}, expected 0", total));
  }
  if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw ValidationError(fmt::format("epsilon = {} outside (0, 1)", config.epsilon));
  }
  if (!(config.separation_exponent > 0.0 && config.separation_exponent < 1.0)) {
    throw ValidationError(
        fmt::format("separation exponent = {} outside (0, 1)", config.separation_exponent));
  }
  if (!(config.separation_constant > 0.0)) {
    throw ValidationError("separation constant must be positive");
  }
  std::vector<std::string> warnings;
  const double threshold =
      config.separation_constant * std::pow(config.epsilon, config.separation_exponent);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double sep = torus_separation(config.positions[i], config.positions[j]);
      if (sep < 1e-12) throw ValidationError(fmt::format("vortices {} and {} coincide", i, j));
      if (sep >= kLocalDistanceLimit) continue;
      const double d = local_distance(structure, config.positions[i], config.positions[j]);
      if (d < threshold) {
        warnings.push_back(fmt::format("d_F(a_{}, a_{}) = {:.4g} below C eps^alpha = {:.4g}", i,
                                       j, d, threshold));
      }
    }
  }
  return warnings;
}

Eigen::VectorXd stack(const std::vector<Vec2>& v) {
  Eigen::VectorXd x(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) x.segment<2>(2 * i) = v[i];
  return x;
}

std::vector<Vec2> unstack(const Eigen::VectorXd& x) {
  std::vector<Vec2> v(x.size() / 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x.segment<2>(2 * i);
  return v;
}

Eigen::VectorXd stack_positions(const VortexConfiguration& config) {
  return stack(config.positions);
}

VortexConfiguration with_positions(const VortexConfiguration& config, const Eigen::VectorXd& x) {
  VortexConfiguration c = config;
  c.positions = unstack(x);
  return c;
}

// ---------------------------------------------------------------------------

void EnergyModel::check_separation(const VortexConfiguration& config) const {
  const double limit = 4.0 * grid().h() * (1.0 - 1e-12);
  for (std::size_t i = 0; i < config.size(); ++i) {
    for (std::size_t j = i + 1; j < config.size(); ++j) {
      const double sep = torus_separation(config.positions[i], config.positions[j]);
      if (sep < limit) {
        throw SeparationTooSmall(
            fmt::format("vortices {} and {} are {:.3g} apart, below 4h = {:.3g}", i, j, sep,
                        4.0 * grid().h()));
      }
    }
  }
}

double EnergyModel::green(const Vec2& x, const Vec2& y) {
  if (translation_) return translation_->value(x - y);
  return interpolate(grid(), *solver_.field(y), x);
}

// Central differences in x with the same step as in the source, so that for
// translation-invariant kernels d_x and -d_y agree to rounding.
Vec2 EnergyModel::green_dx(const Vec2& x, const Vec2& y) {
  if (translation_) return translation_->gradient(x - y);
  const double s = source_step();
  const auto field = solver_.field(y);
  Vec2 d;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = s;
    d[k] = (interpolate(grid(), *field, x + e) - interpolate(grid(), *field, x - e)) / (2.0 * s);
  }
  return d;
}

Vec2 EnergyModel::green_dy(const Vec2& x, const Vec2& y) {
  if (translation_) return -translation_->gradient(x - y);
  const double s = source_step();
  Vec2 d;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = s;
    d[k] = (green(x, y + e) - green(x, y - e)) / (2.0 * s);
  }
  return d;
}

double EnergyModel::regular_value(const Vec2& y) {
  if (translation_) return translation_->regular_value();
  const Vec2 w = wrap_point(y);
  return fit_regular_value(grid(), *solver_.field(w), w).value;
}

Vec2 EnergyModel::regular_gradient(const Vec2& y) {
  if (translation_) return Vec2::Zero();
  const double s = source_step();
  Vec2 d;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = s;
    d[k] = (regular_value(y + e) - regular_value(y - e)) / (2.0 * s);
  }
  return d;
}

std::vector<Vec2> EnergyModel::gradient_sources(const VortexConfiguration& config) const {
  std::vector<Vec2> out;
  if (translation_) return out;
  const double s = source_step();
  for (const Vec2& a : config.positions) {
    out.push_back(a);
    for (int k = 0; k < 2; ++k) {
      Vec2 e = Vec2::Zero();
      e[k] = s;
      out.push_back(a + e);
      out.push_back(a - e);
    }
  }
  return out;
}

double EnergyModel::energy(const VortexConfiguration& config) {
  check_separation(config);
  if (!translation_) solver_.prefetch(config.positions);
  double w = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const double di = config.degrees[i];
    w += kPi * di * di * regular_value(config.positions[i]);
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (i != j) w += kPi * di * config.degrees[j] * green(config.positions[i], config.positions[j]);
    }
  }
  return w;
}

Vec2 EnergyModel::euclidean_gradient_component(const VortexConfiguration& config, std::size_t i) {
  const Vec2& ai = config.positions[i];
  const double di = config.degrees[i];
  Vec2 g = kPi * di * di * regular_gradient(ai);
  for (std::size_t j = 0; j < config.size(); ++j) {
    if (j == i) continue;
    const Vec2& aj = config.positions[j];
    g += kPi * di * config.degrees[j] * (green_dx(ai, aj) + green_dy(aj, ai));
  }
  return g;
}

std::vector<Vec2> EnergyModel::interaction_covectors(const VortexConfiguration& config) {
  check_separation(config);
  solver_.prefetch(gradient_sources(config));
  std::vector<Vec2> out(config.size(), Vec2::Zero());
  for (std::size_t i = 0; i < config.size(); ++i) {
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (j == i) continue;
      const Vec2& ai = config.positions[i];
      const Vec2& aj = config.positions[j];
      out[i] += kPi * config.degrees[i] * config.degrees[j] * (green_dx(ai, aj) + green_dy(aj, ai));
    }
  }
  return out;
}

std::vector<Vec2> EnergyModel::euclidean_gradient(const VortexConfiguration& config) {
  check_separation(config);
  solver_.prefetch(gradient_sources(config));
  std::vector<Vec2> g(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) g[i] = euclidean_gradient_component(config, i);
  return g;
}

Eigen::MatrixXd EnergyModel::hessian(const VortexConfiguration& config, double* asymmetry) {
  check_separation(config);
  const std::size_t n = config.size();
  const double s = source_step();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);

  if (translation_) {
    // W = pi sum_{i != j} d_i d_j T(a_i - a_j) + const
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const Mat2 t = translation_->hessian(config.positions[i] - config.positions[j]) +
                       translation_->hessian(config.positions[j] - config.positions[i]);
        const Mat2 b = kPi * config.degrees[i] * config.degrees[j] * t;
        h.block<2, 2>(2 * i, 2 * j) -= b;
        h.block<2, 2>(2 * i, 2 * i) += b;
      }
    }
    if (asymmetry) *asymmetry = (h - h.transpose()).norm() / std::max(h.norm(), 1e-300);
    return 0.5 * (h + h.transpose());
  }

  std::vector<Vec2> sources = gradient_sources(config);
  for (const Vec2& a : config.positions) {
    for (int k = 0; k < 2; ++k) {
      for (int l = 0; l < 2; ++l) {
        Vec2 ek = Vec2::Zero(), el = Vec2::Zero();
        ek[k] = s;
        el[l] = s;
        for (double sk : {1.0, -1.0})
          for (double sl : {1.0, -1.0}) sources.push_back(a + sk * ek + sl * el);
      }
    }
  }
  solver_.prefetch(sources);

  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& ai = config.positions[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Vec2& aj = config.positions[j];
      Mat2 block;
      for (int l = 0; l < 2; ++l) {
        Vec2 e = Vec2::Zero();
        e[l] = s;
        // d/da_j^l of d_x G(a_i; a_j): column l.
        const Vec2 m1 = (green_dx(ai, aj + e) - green_dx(ai, aj - e)) / (2.0 * s);
        block.col(l) = m1;
      }
      for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = s;
        // d/da_i^k of d_x G(a_j; a_i): row k.
        const Vec2 m2 = (green_dx(aj, ai + e) - green_dx(aj, ai - e)) / (2.0 * s);
        block.row(k) += m2.transpose();
      }
      h.block<2, 2>(2 * i, 2 * j) = kPi * config.degrees[i] * config.degrees[j] * block;
    }
    for (int l = 0; l < 2; ++l) {
      VortexConfiguration plus = config, minus = config;
      plus.positions[i][l] += s;
      minus.positions[i][l] -= s;
      h.block<2, 1>(2 * i, 2 * i + l) = (euclidean_gradient_component(plus, i) -
                                         euclidean_gradient_component(minus, i)) /
                                        (2.0 * s);
    }
  }
  if (asymmetry) *asymmetry = (h - h.transpose()).norm() / std::max(h.norm(), 1e-300);
  return 0.5 * (h + h.transpose());
}

EnergyReport EnergyModel::report(const VortexConfiguration& config, bool gradient, bool hessian) {
  EnergyReport r;
  r.energy = energy(config);
  r.predicted_total = predicted_total_energy(config, r.energy);
  const std::size_t n = config.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = wrap_point(config.positions[i]);
    const RingFit fit = translation_ ? translation_->regular_fit()
                                     : fit_regular_value(grid(), *solver_.field(a), a);
    const double di = config.degrees[i];
    r.regular_values.push_back(fit.value);
    r.self_energy.push_back(kPi * di * di * fit.value);
    r.ring_fits.push_back(fit);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double g = green(config.positions[i], config.positions[j]);
      r.pairs.push_back({i, j, g, kPi * di * config.degrees[j] * g});
    }
  }
  if (gradient || hessian) {
    r.has_gradient = true;
    r.interaction_covector = interaction_covectors(config);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = config.positions[i];
      const double di = config.degrees[i];
      r.regular_gradient.push_back(regular_gradient(a));
      r.euclidean_gradient.push_back(r.interaction_covector[i] + kPi * di * di * r.regular_gradient[i]);
      r.gradient.push_back(legendre_map(structure(), a, r.euclidean_gradient[i]));
      const double res = dual_norm(structure(), a, r.euclidean_gradient[i] / (2.0 * kPi * di));
      r.equilibrium_residual.push_back(res);
      worst = std::max(worst, res);
    }
    r.equilibrium = worst <= kEquilibriumTolerance;
  }
  if (hessian) {
    r.has_hessian = true;
    r.hessian = this->hessian(config, &r.hessian_asymmetry);
  }
  return r;
}

// ---------------------------------------------------------------------------

EnergyReport renormalized_energy(GreenSolver& solver, const VortexConfiguration& config) {
  return EnergyModel(solver).report(config, false, false);
}

std::vector<Vec2> gradient_WF(GreenSolver& solver, const VortexConfiguration& config) {
  EnergyModel model(solver);
  const std::vector<Vec2> g = model.euclidean_gradient(config);
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.push_back(legendre_map(solver.structure(), config.positions[i], g[i]));
  }
  return out;
}

Eigen::MatrixXd hessian_WF(GreenSolver& solver, const VortexConfiguration& config,
                           double* asymmetry) {
  return EnergyModel(solver).hessian(config, asymmetry);
}

void require_admissible(const VortexConfiguration& config, const std::vector<Vec2>& v) {
  if (v.size() != config.size()) {
    throw InadmissibleVariation("displacement count does not match the configuration");
  }
  Vec2 s = Vec2::Zero();
  double scale = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += config.degrees[i] * v[i];
    scale += std::abs(config.degrees[i]) * v[i].norm();
  }
  if (s.norm() > 1e-10 * std::max(scale, 1e-300)) {
    throw InadmissibleVariation(
        fmt::format("sum d_i v_i = ({:.3g}, {:.3g}) is not zero", s[0], s[1]));
  }
}

ScalarField perturbation_potential(GreenSolver& solver, const VortexConfiguration& config,
                                   const std::vector<Vec2>& displacement) {
  const double tau = solver.grid().h();
  ScalarField u = ScalarField::Zero(solver.grid().size());
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (displacement[i].isZero()) continue;
    const Vec2& a = config.positions[i];
    const auto plus = solver.field(a + tau * displacement[i]);
    const auto minus = solver.field(a - tau * displacement[i]);
    u += config.degrees[i] * (*plus - *minus) / (2.0 * tau);
  }
  return u;
}

double second_variation_field(GreenSolver& solver, const VortexConfiguration& config,
                              const std::vector<Vec2>& displacement) {
  require_admissible(config, displacement);
  const ScalarField u = perturbation_potential(solver, config, displacement);
  const DirichletForm& form = solver.solver().form();
  return 2.0 * kPi * form.energy(u);
}

std::vector<double> equilibrium_residual(GreenSolver& solver, const VortexConfiguration& config) {
  EnergyModel model(solver);
  const std::vector<Vec2> g = model.euclidean_gradient(config);
  std::vector<double> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.push_back(dual_norm(solver.structure(), config.positions[i],
                            g[i] / (2.0 * kPi * config.degrees[i])));
  }
  return out;
}

Vec2 effective_force(GreenSolver& solver, const VortexConfiguration& config, std::size_t i) {
  EnergyModel model(solver);
  const Vec2 xi = model.interaction_covectors(config).at(i);
  if (xi.isZero()) return Vec2::Zero();
  const DualNorm dn = dual_norm_at(solver.structure(), config.positions[i]);
  return -(dn.hessian(xi, /*regularize=*/true) * xi);
}

AlignmentResult alignment_residual(const FinslerStructure& randers, GreenSolver& alpha_solver,
                                   const VortexConfiguration& config) {
  if (randers.kind() != MetricKind::Randers) {
    throw NotRanders("alignment_residual requires a Randers structure");
  }
  EnergyModel model(alpha_solver);
  AlignmentResult out;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const Vec2& ai = config.positions[i];
    const Mat2 p = alpha_solver.structure().alpha(ai).inverse();
    const Mat2 a = antisymmetric_part(randers, ai);
    Vec2 iso = Vec2::Zero();
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (j == i) continue;
      iso += config.degrees[j] * (p * model.green_dx(ai, config.positions[j]));
    }
    out.isotropic.push_back(iso);
    out.residual.push_back(iso - a * iso);
    out.rotation.push_back(a(1, 0));
  }
  return out;
}

double predicted_total_energy(const VortexConfiguration& config, double energy) {
  if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw ValidationError("epsilon must lie in (0, 1)");
  }
  return kPi * static_cast<double>(config.size()) * std::abs(std::log(config.epsilon)) + energy;
}

}  // namespace fvortex
