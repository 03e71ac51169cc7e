#pragma once

#include <cmath>

#include <Eigen/Core>

namespace fvortex {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;

/// Reduce a coordinate to the fundamental period [0, 1).
inline double wrap_coordinate(double t) {
  double r = t - std::floor(t);
  return r >= 1.0 ? 0.0 : r;
}

inline Vec2 wrap_point(const Vec2& x) { return {wrap_coordinate(x[0]), wrap_coordinate(x[1])}; }

/// Minimal periodic representative of a displacement, components in [-1/2, 1/2).
inline Vec2 min_image(const Vec2& d) {
  auto reduce = [](double t) { return t - std::floor(t + 0.5); };
  return {reduce(d[0]), reduce(d[1])};
}

/// Euclidean length of the minimal representative of y - x.
inline double torus_separation(const Vec2& x, const Vec2& y) { return min_image(y - x).norm(); }

}  // namespace fvortex
