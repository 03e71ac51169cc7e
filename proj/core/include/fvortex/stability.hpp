#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fvortex/vortex_energy.hpp"

namespace fvortex {

/// Zero-mode threshold as a fraction of the spectral radius.
inline constexpr double kZeroModeFraction = 1e-3;

struct StabilityReport {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal in the co-metric
  std::vector<Mat2> metric_blocks;
  std::vector<bool> metric_fallback;  // block taken from a^-1 at a vanishing covector
  double tol_zero = 0.0;
  int zero_mode_count = 0;
  bool stable = false;
  double reconstruction_error = 0.0;  // relative, in the Cholesky-whitened basis
  double gram_defect = 0.0;           // max |V^T M V - I|
};

/// Gram blocks T_F(a_i, xi_i) at the interaction covectors. A covector whose
/// normalized co-norm is below the equilibrium tolerance is treated as zero
/// and the block falls back to a^-1.
std::vector<Mat2> cometric_blocks(const FinslerStructure& f, const VortexConfiguration& config,
                                  const std::vector<Vec2>& covectors,
                                  std::vector<bool>* fallback = nullptr);

/// H v = lambda M v with M = blockdiag(blocks), by Cholesky whitening.
StabilityReport stability_spectrum(const Eigen::MatrixXd& hessian, std::vector<Mat2> blocks);
StabilityReport stability_spectrum(GreenSolver& solver, const VortexConfiguration& config);

struct ExpansionCheck {
  std::vector<double> steps;
  std::vector<double> remainders;  // |W(a + t v) - W(a) - t <dW, v> - t^2 v^T H v / 2|
  std::vector<double> quadratic;   // t^2 v^T H v / 2
  std::vector<double> increments;  // W(a + t v) - W(a)
  double order = 0.0;  // NaN with fewer than three steps
  bool exact = false;  // every remainder at rounding level
};

/// Second-order Taylor check at a stationary configuration.
ExpansionCheck quadratic_expansion_check(GreenSolver& solver, const VortexConfiguration& config,
                                         const std::vector<Vec2>& displacement,
                                         const std::vector<double>& steps = {0.02, 0.01, 0.005},
                                         const Eigen::MatrixXd* hessian = nullptr);

enum class ElasticityMode {
  Exact,       // C_F at du, which by homogeneity reproduces the field form
  FirstOrder,  // a^-1 - S_beta(du) in place of C_F
};

/// pi * sum_q W_q <C du_q, du_q> for the perturbation potential of v.
double elasticity_form(GreenSolver& solver, const VortexConfiguration& config,
                       const std::vector<Vec2>& displacement,
                       ElasticityMode mode = ElasticityMode::Exact);

/// Random admissible displacement (sum d_i v_i = 0) of unit Euclidean norm.
std::vector<Vec2> random_admissible(const VortexConfiguration& config, std::uint64_t seed);

/// Projection onto sum d_i v_i = 0.
std::vector<Vec2> make_admissible(const VortexConfiguration& config, std::vector<Vec2> v);

}  // namespace fvortex
