#include "fvortex/oracle/spectral_green.hpp"

#include <cmath>
#include <numbers>

namespace fvortex::oracle {
namespace {

constexpr double kPi = std::numbers::pi;

double reduce(double t) { return t - std::floor(t + 0.5); }

// Mode n of the 1D periodic Green function of -d^2/dt^2 + (2 pi n)^2,
// written so that no exponential overflows for t in [0, 1].
struct Mixed {
  double value;
  double ds;  // derivative along the cosine axis
  double dt;  // derivative along the resummed axis, t >= 0
};

Mixed mixed_sum(double s, double t, int K) {
  Mixed m{0.5 * (t * t - t) + 1.0 / 12.0, 0.0, t - 0.5};
  for (int n = 1; n <= K; ++n) {
    const double a = 2.0 * kPi * n;
    const double denom = 1.0 - std::exp(-a);
    const double em = std::exp(-a * t);
    const double ep = std::exp(a * (t - 1.0));
    const double c = std::cos(a * s);
    const double sn = std::sin(a * s);
    m.value += c * (em + ep) / (a * denom);
    m.ds -= sn * (em + ep) / denom;
    m.dt += c * (ep - em) / denom;
  }
  return m;
}

}  // namespace

double iso_green(const Eigen::Vector2d& x, const Eigen::Vector2d& y, int K) {
  const double d1 = std::abs(reduce(x[0] - y[0]));
  const double d2 = std::abs(reduce(x[1] - y[1]));
  if (d1 < 1e-14 && d2 < 1e-14) throw CoincidentPoints("iso_green: coincident points");
  return d2 >= d1 ? mixed_sum(d1, d2, K).value : mixed_sum(d2, d1, K).value;
}

Eigen::Vector2d iso_green_gradient(const Eigen::Vector2d& x, const Eigen::Vector2d& y, int K) {
  const double r1 = reduce(x[0] - y[0]);
  const double r2 = reduce(x[1] - y[1]);
  const double d1 = std::abs(r1);
  const double d2 = std::abs(r2);
  if (d1 < 1e-14 && d2 < 1e-14) throw CoincidentPoints("iso_green_gradient: coincident points");
  const double sg1 = r1 < 0.0 ? -1.0 : 1.0;
  const double sg2 = r2 < 0.0 ? -1.0 : 1.0;
  if (d2 >= d1) {
    const Mixed m = mixed_sum(d1, d2, K);
    return {sg1 * m.ds, sg2 * m.dt};
  }
  const Mixed m = mixed_sum(d2, d1, K);
  return {sg1 * m.dt, sg2 * m.ds};
}

double iso_regular_part(int K, const std::vector<double>& separations, double angle) {
  const Eigen::Vector2d origin(0.0, 0.0);
  const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
  std::vector<double> level;
  level.reserve(separations.size());
  for (double r : separations) {
    level.push_back(iso_green(origin + r * dir, origin, K) + std::log(r) / (2.0 * kPi));
  }
  // Remainder is even in r, so successive levels remove r^2, r^4, ...
  double factor = 4.0;
  while (level.size() > 1) {
    std::vector<double> next;
    for (std::size_t i = 0; i + 1 < level.size(); ++i) {
      next.push_back((factor * level[i + 1] - level[i]) / (factor - 1.0));
    }
    level = std::move(next);
    factor *= 4.0;
  }
  return level.front();
}

double iso_renormalized_energy(const std::vector<Eigen::Vector2d>& positions,
                               const std::vector<int>& degrees, double regular_part, int K) {
  double w = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    w += kPi * degrees[i] * degrees[i] * regular_part;
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i != j) w += kPi * degrees[i] * degrees[j] * iso_green(positions[i], positions[j], K);
    }
  }
  return w;
}

std::vector<Eigen::Vector2d> iso_renormalized_gradient(
    const std::vector<Eigen::Vector2d>& positions, const std::vector<int>& degrees, int K) {
  std::vector<Eigen::Vector2d> g(positions.size(), Eigen::Vector2d::Zero());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i == j) continue;
      g[i] += 2.0 * kPi * degrees[i] * degrees[j] *
              iso_green_gradient(positions[i], positions[j], K);
    }
  }
  return g;
}

}  // namespace fvortex::oracle
