#pragma once

// Reference Green function of -Laplace on the unit square torus, normalized
// to zero mean. Independent of the grid pipeline.

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace fvortex::oracle {

class CoincidentPoints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sum over k in Z^2 \ {0} of exp(2 pi i k.(x - y)) / (4 pi^2 |k|^2), with the
/// frequency along the larger offset axis resummed in closed form. K bounds
/// the remaining frequency index; the tail decays like exp(-2 pi K t).
double iso_green(const Eigen::Vector2d& x, const Eigen::Vector2d& y, int K = 64);

/// Gradient with respect to x, summed termwise.
Eigen::Vector2d iso_green_gradient(const Eigen::Vector2d& x, const Eigen::Vector2d& y,
                                   int K = 128);

/// Limit of iso_green + log|x - y| / (2 pi) at the diagonal, by two-level
/// Richardson extrapolation (order 2 then 4) over `separations`, which must
/// halve successively. `angle` is the direction of approach.
double iso_regular_part(int K = 8192, const std::vector<double>& separations = {0.02, 0.01, 0.005},
                        double angle = 0.3);

/// Euclidean renormalized energy pi sum_{i != j} d_i d_j G(a_i, a_j) + pi H0 sum d_i^2.
double iso_renormalized_energy(const std::vector<Eigen::Vector2d>& positions,
                               const std::vector<int>& degrees, double regular_part, int K = 64);

/// Its coordinate gradient, one covector per vortex.
std::vector<Eigen::Vector2d> iso_renormalized_gradient(
    const std::vector<Eigen::Vector2d>& positions, const std::vector<int>& degrees, int K = 128);

}  // namespace fvortex::oracle
