#include "fvortex/solver.hpp"

#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {
namespace {

// FFTW planning is not thread-safe; execution on fresh arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

/// Inverse of the circulant operator with the constant-coefficient stencil of
/// the form; the zero mode is sent to zero.
class FftPreconditioner {
 public:
  FftPreconditioner(const DirichletForm& form, const Mat2& p, double sigma) : n_(form.grid().n()) {
    const std::size_t half = static_cast<std::size_t>(n_) * (n_ / 2 + 1);
    double* in = fftw_alloc_real(static_cast<std::size_t>(n_) * n_);
    fftw_complex* out = fftw_alloc_complex(half);
    {
      std::lock_guard lock(fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_2d(n_, n_, in, out, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_2d(n_, n_, out, in, FFTW_ESTIMATE);
    }
    const Eigen::VectorXd impulse = form.constant_impulse(p, sigma);
    std::copy(impulse.data(), impulse.data() + impulse.size(), in);
    fftw_execute_dft_r2c(forward_, in, out);
    inv_symbol_.resize(static_cast<Eigen::Index>(half));
    const double scale = 1.0 / (static_cast<double>(n_) * n_);
    for (std::size_t k = 0; k < half; ++k) {
      const double s = out[k][0];
      inv_symbol_[static_cast<Eigen::Index>(k)] = (k == 0 || s <= 0.0) ? 0.0 : scale / s;
    }
    fftw_free(in);
    fftw_free(out);
  }

  ~FftPreconditioner() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  FftPreconditioner(const FftPreconditioner&) = delete;
  FftPreconditioner& operator=(const FftPreconditioner&) = delete;

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const {
    const std::size_t half = static_cast<std::size_t>(inv_symbol_.size());
    double* in = fftw_alloc_real(static_cast<std::size_t>(r.size()));
    fftw_complex* out = fftw_alloc_complex(half);
    std::copy(r.data(), r.data() + r.size(), in);
    fftw_execute_dft_r2c(forward_, in, out);
    for (std::size_t k = 0; k < half; ++k) {
      out[k][0] *= inv_symbol_[static_cast<Eigen::Index>(k)];
      out[k][1] *= inv_symbol_[static_cast<Eigen::Index>(k)];
    }
    fftw_execute_dft_c2r(backward_, out, in);
    Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(in, r.size());
    fftw_free(in);
    fftw_free(out);
    return z;
  }

 private:
  int n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  Eigen::VectorXd inv_symbol_;
};

MeanZeroSolver::MeanZeroSolver(std::shared_ptr<const DirichletForm> form, SolverOptions options)
    : form_(std::move(form)), options_(options) {
  precond_ = std::make_unique<FftPreconditioner>(*form_, form_->mean_alpha_inverse(),
                                                 form_->mean_density());
}

MeanZeroSolver::~MeanZeroSolver() = default;
MeanZeroSolver::MeanZeroSolver(MeanZeroSolver&&) noexcept = default;
MeanZeroSolver& MeanZeroSolver::operator=(MeanZeroSolver&&) noexcept = default;

ScalarField MeanZeroSolver::linear_solve(const TangentOperator& op, const Eigen::VectorXd& load,
                                         double tol, SolveStats* stats) const {
  const double bnorm = load.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(load.size());
  if (bnorm == 0.0) return x;
  Eigen::VectorXd r = load;
  Eigen::VectorXd z = precond_->apply(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  int it = 0;
  double rel = 1.0;
  while (it < options_.max_cg) {
    const Eigen::VectorXd ap = op.apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double a = rz / pap;
    x += a * p;
    r -= a * ap;
    ++it;
    rel = r.norm() / bnorm;
    if (rel <= tol) break;
    z = precond_->apply(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (stats) stats->cg_iterations += it;
  if (!(rel <= tol)) {
    throw SolverDiverged(
        fmt::format("conjugate gradient stopped at relative residual {:.3e} after {} iterations",
                    rel, it));
  }
  return x;
}

ScalarField MeanZeroSolver::solve_load(const Eigen::VectorXd& load, SolveStats* stats) const {
  const TorusGrid& grid = form_->grid();
  if (load.size() != static_cast<Eigen::Index>(grid.size())) {
    throw ValidationError("load vector does not match the grid");
  }
  if (std::abs(load.sum()) > 1e-10 * std::max(load.cwiseAbs().maxCoeff(), 1e-300) *
                                 std::sqrt(static_cast<double>(load.size()))) {
    throw NonNeutralSource(fmt::format("load has nonzero total {:.3e}", load.sum()));
  }
  Eigen::VectorXd b = load;
  b.array() -= b.sum() / static_cast<double>(b.size());
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};

  Eigen::VectorXd u = linear_solve(form_->alpha_tangent(), b, options_.linear_tol, &st);
  const double bnorm = b.norm();
  if (form_->linear() || bnorm == 0.0) {
    st.relative_residual = bnorm == 0.0 ? 0.0 : (form_->energy_gradient(u) - b).norm() / bnorm;
    return grid.project_mean_zero(u);
  }

  auto potential = [&](const Eigen::VectorXd& v) { return form_->energy(v) - b.dot(v); };
  Eigen::VectorXd g = form_->energy_gradient(u) - b;
  double rel = g.norm() / bnorm;
  double phi = potential(u);
  while (rel > options_.newton_tol) {
    if (st.newton_iterations >= options_.max_newton) {
      throw NewtonStall(fmt::format("Newton iteration limit reached at relative residual {:.3e}",
                                    rel),
                        rel);
    }
    ++st.newton_iterations;
    const TangentOperator tan = form_->tangent(u);
    const double inner_tol = std::clamp(0.1 * rel, 1e-12, 1e-2);
    const Eigen::VectorXd g0 = g.array() - g.sum() / static_cast<double>(g.size());
    const Eigen::VectorXd step = linear_solve(tan, -g0, inner_tol, &st);
    const double slope = g.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= options_.max_halvings; ++k) {
      const Eigen::VectorXd trial = u + t * step;
      const double phi_trial = potential(trial);
      const Eigen::VectorXd g_trial = form_->energy_gradient(trial) - b;
      // Near convergence the potential decrease drowns in rounding, so a
      // sufficient drop of the residual norm is accepted as well.
      if (phi_trial <= phi + 1e-4 * t * slope || g_trial.norm() <= (1.0 - 1e-4 * t) * g.norm()) {
        u = trial;
        g = g_trial;
        phi = phi_trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      throw NewtonStall(
          fmt::format("line search failed after {} halvings at relative residual {:.3e}",
                      options_.max_halvings, rel),
          rel);
    }
    rel = g.norm() / bnorm;
  }
  st.relative_residual = rel;
  return grid.project_mean_zero(u);
}

ScalarField MeanZeroSolver::solve(const ScalarField& rhs, SolveStats* stats) const {
  const TorusGrid& grid = form_->grid();
  const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
  if (std::abs(grid.mean(rhs)) > 1e-10 * scale) {
    throw NonNeutralSource(
        fmt::format("right-hand side has mu-mean {:.3e}, expected 0", grid.mean(rhs)));
  }
  Eigen::VectorXd load = grid.weights().cwiseProduct(rhs);
  load.array() -= load.sum() / static_cast<double>(load.size());
  return solve_load(load, stats);
}

ScalarField solve_mean_zero(const DirichletForm& form, const ScalarField& rhs,
                            const SolverOptions& options) {
  // Non-owning alias; the solver does not outlive this call.
  std::shared_ptr<const DirichletForm> alias(std::shared_ptr<const DirichletForm>{}, &form);
  return MeanZeroSolver(alias, options).solve(rhs);
}

}  // namespace fvortex
