#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "fvortex/green_kernel.hpp"

namespace fvortex {

struct VortexConfiguration {
  std::vector<Vec2> positions;
  std::vector<int> degrees;
  double epsilon = 0.01;              // core scale, only enters the predicted total
  double separation_exponent = 0.5;   // alpha in C eps^alpha
  double separation_constant = 1.0;   // C

  std::size_t size() const noexcept { return positions.size(); }
};

/// Throws on violated invariants (neutrality, zero degrees, coincident
/// points, parameter ranges); returns warnings for pairs closer than
/// C eps^alpha in the frozen-coefficient distance.
std::vector<std::string> validate_configuration(const VortexConfiguration& config,
                                                const FinslerStructure& structure);

/// Stacked coordinates (x1_0, x2_0, x1_1, ...) and back.
Eigen::VectorXd stack_positions(const VortexConfiguration& config);
VortexConfiguration with_positions(const VortexConfiguration& config, const Eigen::VectorXd& x);
Eigen::VectorXd stack(const std::vector<Vec2>& v);
std::vector<Vec2> unstack(const Eigen::VectorXd& x);

struct PairTerm {
  std::size_t i, j;
  double g;             // G(a_i; a_j)
  double contribution;  // pi d_i d_j G(a_i; a_j)
};

struct EnergyReport {
  double energy = 0.0;
  double predicted_total = 0.0;
  std::vector<PairTerm> pairs;
  std::vector<double> regular_values;  // H(a_i, a_i)
  std::vector<double> self_energy;     // pi d_i^2 H(a_i, a_i)
  std::vector<RingFit> ring_fits;

  bool has_gradient = false;
  std::vector<Vec2> euclidean_gradient;    // dW / da_i
  std::vector<Vec2> gradient;              // Legendre image of the above
  std::vector<Vec2> interaction_covector;  // dW / da_i without the self term
  std::vector<Vec2> regular_gradient;      // gradient of y -> H(y, y)
  std::vector<double> equilibrium_residual;
  bool equilibrium = false;

  bool has_hessian = false;
  Eigen::MatrixXd hessian;  // symmetrized coordinate Hessian
  double hessian_asymmetry = 0.0;
};

/// Equilibrium flag threshold on F*(a_i, dW_i / (2 pi d_i)).
inline constexpr double kEquilibriumTolerance = 1e-4 * kPi;

/// Renormalized energy pi sum_{i != j} d_i d_j G(a_i; a_j) + pi sum_i d_i^2 H(a_i, a_i)
/// assembled from single-source kernels. With constant coefficients the
/// kernel is the translation kernel and every derivative is analytic.
/// Otherwise derivatives in source positions are central differences of
/// step 2h over re-solved fields.
class EnergyModel {
 public:
  explicit EnergyModel(GreenSolver& solver) : solver_(solver), translation_(solver.translation()) {}

  GreenSolver& solver() noexcept { return solver_; }
  const TorusGrid& grid() const noexcept { return solver_.grid(); }
  const FinslerStructure& structure() const noexcept { return solver_.structure(); }
  double source_step() const noexcept { return 2.0 * grid().h(); }

  double energy(const VortexConfiguration& config);
  EnergyReport report(const VortexConfiguration& config, bool gradient, bool hessian);

  std::vector<Vec2> euclidean_gradient(const VortexConfiguration& config);
  Vec2 euclidean_gradient_component(const VortexConfiguration& config, std::size_t i);
  std::vector<Vec2> interaction_covectors(const VortexConfiguration& config);
  Eigen::MatrixXd hessian(const VortexConfiguration& config, double* asymmetry = nullptr);

  /// G(x; y), d_x G(x; y), d_y G(x; y).
  double green(const Vec2& x, const Vec2& y);
  Vec2 green_dx(const Vec2& x, const Vec2& y);
  Vec2 green_dy(const Vec2& x, const Vec2& y);
  double regular_value(const Vec2& y);
  Vec2 regular_gradient(const Vec2& y);

  /// Sources needed by gradient evaluation, for parallel prefetching.
  std::vector<Vec2> gradient_sources(const VortexConfiguration& config) const;

 private:
  void check_separation(const VortexConfiguration& config) const;
  GreenSolver& solver_;
  std::shared_ptr<const TranslationKernel> translation_;
};

EnergyReport renormalized_energy(GreenSolver& solver, const VortexConfiguration& config);
std::vector<Vec2> gradient_WF(GreenSolver& solver, const VortexConfiguration& config);
Eigen::MatrixXd hessian_WF(GreenSolver& solver, const VortexConfiguration& config,
                           double* asymmetry = nullptr);

/// Throws InadmissibleVariation unless sum_i d_i v_i = 0.
void require_admissible(const VortexConfiguration& config, const std::vector<Vec2>& displacement);

/// Perturbation potential U_v = sum_i d_i (Phi(a_i + tau v_i) - Phi(a_i - tau v_i)) / (2 tau),
/// tau = h, with Phi(y) the Green field of source y.
ScalarField perturbation_potential(GreenSolver& solver, const VortexConfiguration& config,
                                   const std::vector<Vec2>& displacement);
/// pi * sum_q W_q F*^2(du_q) for U_v; requires sum_i d_i v_i = 0.
double second_variation_field(GreenSolver& solver, const VortexConfiguration& config,
                              const std::vector<Vec2>& displacement);

/// F*(a_i, dW_i / (2 pi d_i)) per vortex.
std::vector<double> equilibrium_residual(GreenSolver& solver, const VortexConfiguration& config);

/// -T_F(a_i, xi) xi with xi the interaction covector at a_i (= -L(xi)).
Vec2 effective_force(GreenSolver& solver, const VortexConfiguration& config, std::size_t i);

struct AlignmentResult {
  std::vector<Vec2> residual;     // sum_j d_j (I - A) grad_alpha G_alpha(a_i, a_j)
  std::vector<Vec2> isotropic;    // same without A
  std::vector<double> rotation;   // A_beta(a_i) = rotation * [[0, -1], [1, 0]]
};

/// First-order alignment residual with the alpha-metric kernel. `alpha_solver`
/// must be built on the alpha part of the Randers structure.
AlignmentResult alignment_residual(const FinslerStructure& randers, GreenSolver& alpha_solver,
                                   const VortexConfiguration& config);

double predicted_total_energy(const VortexConfiguration& config, double energy);

}  // namespace fvortex
