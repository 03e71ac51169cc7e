#include "fvortex/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "fvortex/errors.hpp"
#include "fvortex/oracle/order_fit.hpp"

namespace fvortex {

std::vector<Mat2> cometric_blocks(const FinslerStructure& f, const VortexConfiguration& config,
                                  const std::vector<Vec2>& covectors,
                                  std::vector<bool>* fallback) {
  std::vector<Mat2> out;
  if (fallback) fallback->assign(config.size(), false);
  for (std::size_t i = 0; i < config.size(); ++i) {
    const Vec2& a = config.positions[i];
    const DualNorm dn = dual_norm_at(f, a);
    const Vec2& xi = covectors.at(i);
    const double scale = 2.0 * kPi * std::abs(config.degrees[i]);
    if (dn.riemannian()) {
      out.push_back(dn.alpha_inverse());
    } else if (dn(xi / scale) <= kEquilibriumTolerance) {
      out.push_back(dn.alpha_inverse());
      if (fallback) (*fallback)[i] = true;
    } else {
      out.push_back(dn.hessian(xi));
    }
  }
  return out;
}

StabilityReport stability_spectrum(const Eigen::MatrixXd& hessian, std::vector<Mat2> blocks) {
  const Eigen::Index m = hessian.rows();
  if (hessian.cols() != m || m != static_cast<Eigen::Index>(2 * blocks.size())) {
    throw ValidationError("Hessian and Gram blocks have inconsistent sizes");
  }
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Mat2 b = 0.5 * (blocks[i] + blocks[i].transpose());
    Eigen::LLT<Mat2> llt(b);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0)) {
      throw GramNotPD(fmt::format("co-metric Gram block of vortex {} is not positive definite", i),
                      i);
    }
    const Eigen::Index k = static_cast<Eigen::Index>(2 * i);
    l.block<2, 2>(k, k) = llt.matrixL();
    gram.block<2, 2>(k, k) = b;
    blocks[i] = b;
  }
  const Eigen::MatrixXd h = 0.5 * (hessian + hessian.transpose());
  // C = L^-1 H L^-T
  const auto lt = l.triangularView<Eigen::Lower>();
  Eigen::MatrixXd c = lt.solve(h);
  c = lt.solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");

  StabilityReport r;
  r.eigenvalues = eig.eigenvalues();
  r.eigenvectors = l.transpose().triangularView<Eigen::Upper>().solve(eig.eigenvectors());
  r.metric_blocks = std::move(blocks);
  r.metric_fallback.assign(r.metric_blocks.size(), false);
  const double radius = r.eigenvalues.cwiseAbs().maxCoeff();
  r.tol_zero = kZeroModeFraction * radius;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (std::abs(r.eigenvalues[k]) <= r.tol_zero) ++r.zero_mode_count;
  }
  r.stable = r.eigenvalues.minCoeff() >= -r.tol_zero;
  const Eigen::MatrixXd& q = eig.eigenvectors();
  const Eigen::MatrixXd rebuilt = l * q * r.eigenvalues.asDiagonal() * q.transpose() * l.transpose();
  r.reconstruction_error = (h - rebuilt).norm() / std::max(h.norm(), 1e-300);
  r.gram_defect = (r.eigenvectors.transpose() * gram * r.eigenvectors -
                   Eigen::MatrixXd::Identity(m, m))
                      .cwiseAbs()
                      .maxCoeff();
  return r;
}

StabilityReport stability_spectrum(GreenSolver& solver, const VortexConfiguration& config) {
  EnergyModel model(solver);
  const Eigen::MatrixXd h = model.hessian(config);
  std::vector<bool> fallback;
  auto blocks = cometric_blocks(solver.structure(), config, model.interaction_covectors(config),
                                &fallback);
  StabilityReport r = stability_spectrum(h, std::move(blocks));
  r.metric_fallback = std::move(fallback);
  return r;
}

std::vector<Vec2> make_admissible(const VortexConfiguration& config, std::vector<Vec2> v) {
  Vec2 s = Vec2::Zero();
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += config.degrees[i] * v[i];
    norm += config.degrees[i] * config.degrees[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= config.degrees[i] * s / norm;
  return v;
}

std::vector<Vec2> random_admissible(const VortexConfiguration& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec2> v(config.size());
  for (auto& x : v) x = Vec2(u(rng), u(rng));
  v = make_admissible(config, std::move(v));
  const double n = stack(v).norm();
  if (n == 0.0) throw NumericalError("degenerate random displacement");
  for (auto& x : v) x /= n;
  return v;
}

ExpansionCheck quadratic_expansion_check(GreenSolver& solver, const VortexConfiguration& config,
                                         const std::vector<Vec2>& displacement,
                                         const std::vector<double>& steps,
                                         const Eigen::MatrixXd* hessian) {
  require_admissible(config, displacement);
  EnergyModel model(solver);
  const EnergyReport base = model.report(config, true, false);
  if (!base.equilibrium) {
    const double worst = *std::max_element(base.equilibrium_residual.begin(),
                                           base.equilibrium_residual.end());
    throw NotStationary(fmt::format("equilibrium residual {:.3g} exceeds {:.3g}", worst,
                                    kEquilibriumTolerance));
  }
  const Eigen::MatrixXd h = hessian ? *hessian : model.hessian(config);
  const Eigen::VectorXd v = stack(displacement);
  const double vhv = v.dot(h * v);
  const double gv = stack(base.euclidean_gradient).dot(v);
  const double a0 = stack_positions(config).norm();

  ExpansionCheck out;
  std::vector<std::pair<double, double>> pairs;
  bool all_zero = true;
  for (double t : steps) {
    const double w = model.energy(with_positions(config, stack_positions(config) + t * v));
    const double dw = w - base.energy;
    const double quad = 0.5 * t * t * vhv;
    const double rem = std::abs(dw - t * gv - quad);
    // Rounding floor of the three-term difference.
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                         (std::abs(base.energy) + std::abs(quad) + t * h.norm() * (1.0 + a0));
    out.steps.push_back(t);
    out.increments.push_back(dw);
    out.quadratic.push_back(quad);
    out.remainders.push_back(rem);
    const bool zero = rem <= floor;
    all_zero = all_zero && zero;
    pairs.emplace_back(t, zero ? 0.0 : rem);
  }
  out.exact = all_zero;
  if (all_zero) {
    out.order = std::numeric_limits<double>::infinity();
  } else if (pairs.size() >= 3) {
    out.order = oracle::order_fit(pairs);
  } else {
    out.order = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double elasticity_form(GreenSolver& solver, const VortexConfiguration& config,
                       const std::vector<Vec2>& displacement, ElasticityMode mode) {
  require_admissible(config, displacement);
  const ScalarField u = perturbation_potential(solver, config, displacement);
  const DirichletForm& form = solver.solver().form();
  if (mode == ElasticityMode::Exact) {
    return kPi * form.integrate(u, [](const DualNorm& n, const Vec2& xi) {
      if (xi.norm() <= kHessianRegularization) return 0.0;
      return xi.dot(n.hessian(xi) * xi);
    });
  }
  return kPi * form.integrate(u, [](const DualNorm& n, const Vec2& xi) {
    const Mat2& p = n.alpha_inverse();
    if (n.riemannian() || xi.norm() <= kHessianRegularization) return xi.dot(p * xi);
    return xi.dot((p - symmetric_correction(p, n.beta(), xi)) * xi);
  });
}

}  // namespace fvortex
