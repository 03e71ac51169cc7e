#pragma once

// Discrete co-metric Dirichlet energy E(u) = sum_q W_q F*^2(x_q, du_q) / 2
// and the operators derived from it. Gradients du_q are difference
// quotients: on faces a one-sided difference across the face plus an averaged
// tangential difference, at cell centres the 2x2 averaged difference. Faces
// carry 2/3 of the quadrature weight and cell centres 1/3; the blend cancels
// the leading anisotropic truncation term of either family alone.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fvortex/finsler.hpp"
#include "fvortex/torus_grid.hpp"

namespace fvortex {

/// Below this Euclidean covector length the Randers Hessian is replaced by a^-1.
inline constexpr double kHessianRegularization = 1e-8;

class TangentOperator;

class DirichletForm {
 public:
  explicit DirichletForm(std::shared_ptr<const TorusGrid> grid);

  const TorusGrid& grid() const noexcept { return *grid_; }
  std::shared_ptr<const TorusGrid> grid_ptr() const noexcept { return grid_; }
  bool linear() const noexcept { return grid_->structure().kind() == MetricKind::Riemannian; }
  std::size_t quad_count() const noexcept { return quad_.size(); }

  double energy(const ScalarField& u) const;
  /// dE/du_c (an unweighted load-type vector).
  Eigen::VectorXd energy_gradient(const ScalarField& u) const;
  /// Covector du at every quadrature point, family-major.
  std::vector<Vec2> covectors(const ScalarField& u) const;
  /// sum_q W_q f(F*_q, du_q) with the frozen co-norm of each quadrature point.
  double integrate(const ScalarField& u,
                   const std::function<double(const DualNorm&, const Vec2&)>& f) const;

  TangentOperator tangent(const ScalarField& u) const;
  /// Tangent with a^-1 everywhere: the exact operator for Riemannian kind.
  TangentOperator alpha_tangent() const;

  /// Averages of a^-1 and sigma over quadrature points, for preconditioning.
  Mat2 mean_alpha_inverse() const;
  double mean_density() const;

  /// Response of the constant-coefficient operator (a^-1 = p, density sigma)
  /// to a unit impulse at node 0.
  Eigen::VectorXd constant_impulse(const Mat2& p, double sigma) const;

 private:
  friend class TangentOperator;

  struct Quad {
    DualNorm norm;
    double weight;
  };

  Vec2 gather(std::size_t q, const Eigen::VectorXd& v) const;
  void scatter(std::size_t q, const Vec2& flux, Eigen::VectorXd& out) const;

  std::shared_ptr<const TorusGrid> grid_;
  std::vector<Quad> quad_;  // 3 n^2, family-major
  std::vector<std::array<std::uint32_t, 6>> nbr_;
};

/// Symmetric positive-semidefinite Hessian of E, applied matrix-free.
class TangentOperator {
 public:
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::SparseMatrix<double> to_sparse() const;
  std::size_t size() const noexcept { return form_->grid().size(); }
  /// Quadrature average of the per-point tensors, for preconditioning.
  Mat2 mean_tensor() const;

 private:
  friend class DirichletForm;
  TangentOperator(const DirichletForm* form, std::vector<Mat2> t) : form_(form), t_(std::move(t)) {}
  const DirichletForm* form_;
  std::vector<Mat2> t_;  // weight-scaled tensors per quadrature point
};

/// Residual of -Delta_{F,mu} u: r = (dE/du) / w, so <r, phi>_mu = dE(u)[phi].
ScalarField assemble_weak_laplacian(const DirichletForm& form, const ScalarField& u);
TangentOperator tangent_operator(const DirichletForm& form, const ScalarField& u);
double dirichlet_energy(const DirichletForm& form, const ScalarField& u);

}  // namespace fvortex
