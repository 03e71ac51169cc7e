#pragma once

// Uniform periodic grid on the unit torus. Unknowns live on the nodes
// (i h, j h); the Dirichlet form is integrated on x-faces, y-faces and cell
// centres, so the measure density is sampled at all four point families.

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fvortex/finsler.hpp"

namespace fvortex {

/// Grid-sampled function: one value per node, row index i + n j.
using ScalarField = Eigen::VectorXd;

enum class QuadFamily { XFace = 0, YFace = 1, Cell = 2 };

class TorusGrid {
 public:
  TorusGrid(FinslerStructure structure, int n_per_side);

  int n() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }
  const FinslerStructure& structure() const noexcept { return structure_; }

  std::size_t index(int i, int j) const noexcept {
    const int ii = ((i % n_) + n_) % n_;
    const int jj = ((j % n_) + n_) % n_;
    return static_cast<std::size_t>(ii) + static_cast<std::size_t>(n_) * jj;
  }
  Vec2 node(int i, int j) const noexcept { return {i * h_, j * h_}; }
  Vec2 node(std::size_t k) const noexcept {
    return node(static_cast<int>(k % n_), static_cast<int>(k / n_));
  }
  /// Quadrature point of family `q` attached to node (i, j).
  Vec2 quad_point(QuadFamily q, int i, int j) const noexcept;

  /// sigma(x_c) h^2 at each node; these define the discrete measure mu.
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  /// sigma at the quadrature points of one family, node-indexed.
  const Eigen::VectorXd& quad_density(QuadFamily q) const noexcept {
    return quad_density_[static_cast<int>(q)];
  }
  double volume() const noexcept { return volume_; }

  /// sum_c w_c u_c / Vol.
  double mean(const ScalarField& u) const { return weights_.dot(u) / volume_; }
  ScalarField project_mean_zero(const ScalarField& u) const {
    return u.array() - mean(u);
  }
  /// <u, v>_mu.
  double inner(const ScalarField& u, const ScalarField& v) const {
    return (weights_.array() * u.array() * v.array()).sum();
  }

  template <class Fn>
  ScalarField sample(Fn&& fn) const {
    ScalarField out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = fn(node(k));
    return out;
  }

 private:
  FinslerStructure structure_;
  int n_;
  double h_;
  Eigen::VectorXd weights_;
  std::array<Eigen::VectorXd, 3> quad_density_;
  double volume_ = 0.0;
};

/// Samples used for the grid measure density; Richardson-corrected polygon
/// areas make this accurate far below solver tolerance.
inline constexpr std::size_t kGridDensitySamples = 2048;

struct DiscreteDelta {
  Vec2 center;
  std::vector<std::pair<std::size_t, double>> weights;  // node index, weight
};

/// Bilinear hat on the four surrounding nodes; zero weights are dropped.
DiscreteDelta make_delta(const TorusGrid& grid, const Vec2& center);

/// Load vector delta - w / Vol of the normalized point source, summing to zero.
Eigen::VectorXd source_load(const TorusGrid& grid, const DiscreteDelta& delta);

/// Periodic Catmull-Rom bicubic interpolation (C^1, reproduces linears).
double interpolate(const TorusGrid& grid, const ScalarField& field, const Vec2& x);
Vec2 interpolate_gradient(const TorusGrid& grid, const ScalarField& field, const Vec2& x);

}  // namespace fvortex
