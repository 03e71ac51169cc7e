#pragma once

#include <memory>

#include <Eigen/Core>

#include "fvortex/dirichlet_form.hpp"

namespace fvortex {

struct SolverOptions {
  double linear_tol = 1e-10;  // relative residual of the Riemannian solve
  double newton_tol = 1e-9;   // relative residual of the Randers solve
  int max_newton = 50;
  int max_halvings = 40;
  int max_cg = 20000;
};

struct SolveStats {
  int newton_iterations = 0;
  int cg_iterations = 0;
  double relative_residual = 0.0;
};

class FftPreconditioner;

/// Solves E'(u) = load on the mean-zero subspace. For Riemannian kind this is
/// a PCG solve of the linear system; for Randers kind a damped Newton method
/// on the convex potential E(u) - <load, u>, started from the a^-1 solve.
class MeanZeroSolver {
 public:
  explicit MeanZeroSolver(std::shared_ptr<const DirichletForm> form, SolverOptions options = {});
  ~MeanZeroSolver();
  MeanZeroSolver(MeanZeroSolver&&) noexcept;
  MeanZeroSolver& operator=(MeanZeroSolver&&) noexcept;

  const DirichletForm& form() const noexcept { return *form_; }
  std::shared_ptr<const DirichletForm> form_ptr() const noexcept { return form_; }
  const SolverOptions& options() const noexcept { return options_; }

  /// `rhs` is a function sampled at the nodes; its mu-mean must vanish.
  ScalarField solve(const ScalarField& rhs, SolveStats* stats = nullptr) const;
  /// `load` is a dual vector with zero sum (for example source_load).
  ScalarField solve_load(const Eigen::VectorXd& load, SolveStats* stats = nullptr) const;

 private:
  ScalarField linear_solve(const TangentOperator& op, const Eigen::VectorXd& load, double tol,
                           SolveStats* stats) const;

  std::shared_ptr<const DirichletForm> form_;
  SolverOptions options_;
  std::unique_ptr<FftPreconditioner> precond_;
};

ScalarField solve_mean_zero(const DirichletForm& form, const ScalarField& rhs,
                            const SolverOptions& options = {});

}  // namespace fvortex
