#include "fvortex/torus_grid.hpp"

#include <array>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {

TorusGrid::TorusGrid(FinslerStructure structure, int n_per_side)
    : structure_(std::move(structure)), n_(n_per_side), h_(1.0 / n_per_side) {
  if (n_ < 16 || n_ % 2 != 0) {
    throw ValidationError(fmt::format("grid needs an even n_per_side >= 16 (got {})", n_));
  }
  // Densities repeat heavily (constant or one-variable coefficients), so
  // memoize on the coefficient values themselves.
  std::map<std::array<double, 6>, double> memo;
  auto density = [&](const Vec2& x) {
    const CoefficientSample s = structure_.sample(x);
    const std::array<double, 6> key{s.alpha(0, 0), s.alpha(0, 1), s.alpha(1, 1),
                                    s.beta[0],     s.beta[1],     0.0};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double v = measure_density(s.alpha, s.beta, structure_.kind(), structure_.measure(),
                                     kGridDensitySamples);
    memo.emplace(key, v);
    return v;
  };

  weights_.resize(size());
  for (auto& q : quad_density_) q.resize(size());
  for (int j = 0; j < n_; ++j) {
    for (int i = 0; i < n_; ++i) {
      const std::size_t k = index(i, j);
      weights_[k] = density(node(i, j)) * h_ * h_;
      for (int q = 0; q < 3; ++q) {
        quad_density_[q][k] = density(quad_point(static_cast<QuadFamily>(q), i, j));
      }
    }
  }
  volume_ = weights_.sum();
}

Vec2 TorusGrid::quad_point(QuadFamily q, int i, int j) const noexcept {
  switch (q) {
    case QuadFamily::XFace: return {(i + 0.5) * h_, j * h_};
    case QuadFamily::YFace: return {i * h_, (j + 0.5) * h_};
    case QuadFamily::Cell: return {(i + 0.5) * h_, (j + 0.5) * h_};
  }
  return node(i, j);
}

DiscreteDelta make_delta(const TorusGrid& grid, const Vec2& center) {
  DiscreteDelta d{wrap_point(center), {}};
  const double n = grid.n();
  const double gx = d.center[0] * n;
  const double gy = d.center[1] * n;
  const int i0 = static_cast<int>(std::floor(gx));
  const int j0 = static_cast<int>(std::floor(gy));
  const double fx = gx - i0;
  const double fy = gy - j0;
  const std::array<double, 2> wx{1.0 - fx, fx};
  const std::array<double, 2> wy{1.0 - fy, fy};
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      const double w = wx[a] * wy[b];
      if (w != 0.0) d.weights.emplace_back(grid.index(i0 + a, j0 + b), w);
    }
  }
  return d;
}

Eigen::VectorXd source_load(const TorusGrid& grid, const DiscreteDelta& delta) {
  Eigen::VectorXd load = -grid.weights() / grid.volume();
  for (const auto& [k, w] : delta.weights) load[k] += w;
  // Remove the rounding residue so the load is exactly orthogonal to constants.
  load.array() -= load.sum() / static_cast<double>(load.size());
  return load;
}

namespace {

struct Stencil1D {
  int base;
  std::array<double, 4> w;
  std::array<double, 4> dw;
};

// Keys cubic convolution with a = -1/2 on offsets -1, 0, 1, 2.
Stencil1D keys(double coord, int n) {
  const double g = wrap_coordinate(coord) * n;
  const int i0 = static_cast<int>(std::floor(g));
  const double t = g - i0;
  const double t2 = t * t, t3 = t2 * t;
  Stencil1D s;
  s.base = i0 - 1;
  s.w = {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t),
         0.5 * (t3 - t2)};
  s.dw = {0.5 * (-3 * t2 + 4 * t - 1), 0.5 * (9 * t2 - 10 * t), 0.5 * (-9 * t2 + 8 * t + 1),
          0.5 * (3 * t2 - 2 * t)};
  for (double& v : s.dw) v *= n;
  return s;
}

}  // namespace

double interpolate(const TorusGrid& grid, const ScalarField& field, const Vec2& x) {
  const Stencil1D sx = keys(x[0], grid.n());
  const Stencil1D sy = keys(x[1], grid.n());
  double v = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0;
    for (int a = 0; a < 4; ++a) row += sx.w[a] * field[grid.index(sx.base + a, sy.base + b)];
    v += sy.w[b] * row;
  }
  return v;
}

Vec2 interpolate_gradient(const TorusGrid& grid, const ScalarField& field, const Vec2& x) {
  const Stencil1D sx = keys(x[0], grid.n());
  const Stencil1D sy = keys(x[1], grid.n());
  Vec2 g = Vec2::Zero();
  for (int b = 0; b < 4; ++b) {
    double row = 0.0, drow = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double u = field[grid.index(sx.base + a, sy.base + b)];
      row += sx.w[a] * u;
      drow += sx.dw[a] * u;
    }
    g[0] += sy.w[b] * drow;
    g[1] += sy.dw[b] * row;
  }
  return g;
}

}  // namespace fvortex
