#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "fvortex/errors.hpp"
#include "fvortex/finsler.hpp"
#include "fvortex/oracle/differentiation.hpp"
#include "fvortex/oracle/order_fit.hpp"

using namespace fvortex;
using doctest::Approx;

namespace {

Vec2 random_unit(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> th(0.0, 2.0 * kPi);
  const double t = th(rng);
  return {std::cos(t), std::sin(t)};
}

}  // namespace

TEST_CASE("primal norm values") {
  const Vec2 x(0.3, 0.7);
  CHECK(primal_norm(FinslerStructure::identity(), x, {3, 4}) == Approx(5.0));
  const auto r = FinslerStructure::constant_randers(0.5, 0.0);
  CHECK(primal_norm(r, x, {1, 0}) == Approx(1.5));
  CHECK(primal_norm(r, x, {-1, 0}) == Approx(0.5));
  CHECK(primal_norm(FinslerStructure::diagonal(4, 1), x, {1, 1}) == Approx(std::sqrt(5.0)));
}

TEST_CASE("structures violating convexity are rejected") {
  CHECK_THROWS_AS(FinslerStructure::constant_randers(1.0, 0.0), InvalidStructure);
  CHECK_THROWS_AS(FinslerStructure::constant_randers(0.8, 0.7), InvalidStructure);
  CHECK_THROWS_AS(FinslerStructure::diagonal(1.0, -1.0), InvalidStructure);
  CHECK_THROWS_AS(FinslerStructure::shear_randers(7.0), InvalidStructure);
  CHECK_NOTHROW(FinslerStructure::shear_randers(0.4));
  CHECK_THROWS_AS(DualNorm(Mat2::Identity(), Vec2(1.0, 0.0), MetricKind::Randers),
                  InvalidStructure);
}

TEST_CASE("dual norm values") {
  const Vec2 x(0.1, 0.2);
  CHECK(dual_norm(FinslerStructure::identity(), x, {3, 4}) == Approx(5.0));
  const auto r = FinslerStructure::constant_randers(0.5, 0.0);
  const double oracle = oracle::dual_norm_by_maximization(Mat2::Identity(), {0.5, 0.0}, {1, 0});
  CHECK(dual_norm(r, x, {1, 0}) == Approx(oracle).epsilon(1e-10));
  CHECK(dual_norm(r, x, {1, 0}) == Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(dual_norm(r, x, {0, 0}) == 0.0);
}

TEST_CASE("closed-form dual agrees with indicatrix maximization") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> lam(0.3, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Mat2 q;
    const double th = u(rng) * kPi;
    q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Mat2 a = q * Vec2(lam(rng), lam(rng)).asDiagonal() * q.transpose();
    Vec2 b(u(rng), u(rng));
    const double bn = std::sqrt(b.dot(a.inverse() * b));
    b *= 0.6 * std::abs(u(rng)) / bn;
    const Vec2 xi(u(rng), u(rng));
    const DualNorm dn(a, b, MetricKind::Randers);
    const double ref = oracle::dual_norm_by_maximization(a, b, xi);
    worst = std::max(worst, std::abs(dn(xi) - ref) / ref);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("homogeneity, duality and the Euler identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto f = FinslerStructure::shear_randers(0.9);
  const auto g = FinslerStructure::modulated(0.3);
  double worst_h = 0.0, worst_euler = 0.0, worst_eq = 0.0;
  bool young = true;
  for (int k = 0; k < 1000; ++k) {
    const auto& s = (k % 2) ? f : g;
    const Vec2 x(u(rng), u(rng));
    const Vec2 xi(u(rng), u(rng));
    const Vec2 v(u(rng), u(rng));
    const double t = 0.1 + std::abs(u(rng)) * 5.0;
    worst_h = std::max(worst_h, std::abs(dual_norm(s, x, t * xi) - t * dual_norm(s, x, xi)) /
                                    (t * dual_norm(s, x, xi)));
    worst_h = std::max(worst_h, std::abs(primal_norm(s, x, t * v) - t * primal_norm(s, x, v)) /
                                    (t * primal_norm(s, x, v)));
    const double fs = dual_norm(s, x, xi);
    young = young && fs * primal_norm(s, x, v) >= xi.dot(v) - 1e-14;
    const Vec2 l = legendre_map(s, x, xi);
    worst_euler = std::max(worst_euler, std::abs(xi.dot(l) - fs * fs) / (fs * fs));
    worst_eq = std::max(worst_eq, std::abs(fs * primal_norm(s, x, l) - xi.dot(l)) / xi.dot(l));
  }
  CHECK(worst_h <= 1e-12);
  CHECK(young);
  CHECK(worst_euler <= 1e-8);
  CHECK(worst_eq <= 1e-8);
}

TEST_CASE("legendre map") {
  const Vec2 x(0.0, 0.0);
  const Vec2 l = legendre_map(FinslerStructure::identity(), x, {3, 4});
  CHECK(l[0] == Approx(3.0));
  CHECK(l[1] == Approx(4.0));
  const Vec2 d = legendre_map(FinslerStructure::diagonal(4, 1), x, {1, 0});
  CHECK(d[0] == Approx(0.25));
  CHECK(d[1] == Approx(0.0));

  const auto r = FinslerStructure::constant_randers(0.1, 0.0);
  const Vec2 xi(0, 1);
  auto half_sq = [&](const Eigen::VectorXd& z) {
    const double v = dual_norm(r, x, Vec2(z[0], z[1]));
    return 0.5 * v * v;
  };
  const Eigen::VectorXd fd = oracle::fd_gradient(half_sq, Eigen::VectorXd(xi), 1e-5);
  const Vec2 lr = legendre_map(r, x, xi);
  CHECK(lr[0] == Approx(fd[0]).epsilon(1e-8));
  CHECK(lr[1] == Approx(fd[1]).epsilon(1e-8));
  CHECK(xi.dot(lr) == Approx(std::pow(dual_norm(r, x, xi), 2)).epsilon(1e-12));
}

TEST_CASE("hessian tensor is the Jacobian of the Legendre map") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto f = FinslerStructure::shear_randers(2.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vec2 x(u(rng), u(rng));
    const Vec2 xi(u(rng), u(rng));
    auto leg = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      return legendre_map(f, x, Vec2(z[0], z[1]));
    };
    const Eigen::MatrixXd jac = oracle::fd_jacobian(leg, Eigen::VectorXd(xi), 1e-5);
    worst = std::max(worst, (jac - hessian_tensor(f, x, xi)).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("hessian tensor special cases") {
  const Vec2 x(0.2, 0.2);
  const Mat2 t = hessian_tensor(FinslerStructure::diagonal(4, 1), x, {0.3, -2.0});
  CHECK(t(0, 0) == Approx(0.25));
  CHECK(t(1, 1) == Approx(1.0));
  CHECK(t(0, 1) == Approx(0.0));
  const Mat2 z = hessian_tensor(FinslerStructure::constant_randers(0.0, 0.0), x, {1.0, 2.0});
  CHECK((z - Mat2::Identity()).norm() <= 1e-12);
  CHECK_THROWS_AS(hessian_tensor(FinslerStructure::constant_randers(0.1, 0.0), x, {0, 0}),
                  SingularPoint);
  CHECK_NOTHROW(hessian_tensor(FinslerStructure::identity(), x, {0, 0}));

  const auto r = FinslerStructure::constant_randers(0.2, -0.1);
  const Mat2 c1 = elasticity_tensor(r, x, {0.4, 0.3});
  const Mat2 c2 = elasticity_tensor(r, x, {4.0, 3.0});
  CHECK((c1 - c2).norm() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat2> eig(c1);
  CHECK(eig.eigenvalues()[0] > 0.0);
}

TEST_CASE("first-order Randers response") {
  const Vec2 x(0.4, 0.1);
  const Vec2 xi(0.0, 1.0);
  const auto zero = FinslerStructure::constant_randers(0.0, 0.0);
  const ResponseTensors r0 = randers_first_order(zero, x, xi);
  CHECK(r0.symmetric_correction.norm() == 0.0);
  CHECK(r0.antisymmetric.norm() == 0.0);

  const ResponseTensors rc = randers_first_order(FinslerStructure::constant_randers(0.05, 0), x, xi);
  CHECK(rc.antisymmetric.norm() == 0.0);
  CHECK((rc.mobility - rc.response - rc.antisymmetric).norm() == 0.0);
  CHECK((rc.response - rc.response.transpose()).norm() <= 1e-15);

  CHECK_THROWS_AS(randers_first_order(FinslerStructure::identity(), x, xi), NotRanders);
  CHECK_THROWS_AS(randers_first_order(zero, x, {0, 0}), SingularPoint);
}

TEST_CASE("T_F - (a^-1 - S) is second order in b") {
  const Vec2 x(0.0, 0.0);
  for (const Vec2 xi : {Vec2(0, 1), Vec2(0.7, -0.4), Vec2(1, 0)}) {
    std::vector<std::pair<double, double>> pts;
    for (double b : {0.2, 0.1, 0.05}) {
      const ResponseTensors r = randers_first_order(FinslerStructure::constant_randers(b, 0.5 * b), x, xi);
      pts.emplace_back(b, (r.response - r.first_order_response).norm());
    }
    const double p = oracle::order_fit(pts);
    CHECK(p >= 1.8);
    CHECK(p <= 2.2);
  }
}

TEST_CASE("the two-term symmetric tensor misses a first-order term") {
  const Mat2 p = Mat2::Identity();
  const Vec2 b(0.1, 0.0);
  const Vec2 xi(0.0, 1.0);
  CHECK((symmetric_correction(p, b, xi) - two_term_symmetric_correction(p, b, xi)).norm() <= 1e-15);
  const Vec2 xi2(1.0, 1.0);
  std::vector<std::pair<double, double>> pts;
  for (double s : {0.2, 0.1, 0.05}) {
    const Vec2 bs(s, 0.0);
    pts.emplace_back(s, (symmetric_correction(p, bs, xi2) - two_term_symmetric_correction(p, bs, xi2)).norm());
  }
  CHECK(oracle::order_fit(pts) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("antisymmetric part of the shear field") {
  // Near x^1 = 0 the periodic shear is b = (0, kappa x^1): db_2/dx^1 = kappa.
  const double kappa = 0.3;
  const auto f = FinslerStructure::shear_randers(kappa);
  const Vec2 x(0.0, 0.37);
  const Mat2 a = antisymmetric_part(f, x);
  Mat2 rot;
  rot << 0.0, -1.0, 1.0, 0.0;
  CHECK((a - 0.5 * kappa * rot).norm() <= 1e-14);
  CHECK((a + a.transpose()).norm() == 0.0);
  const Vec2 y(0.23, 0.9);
  CHECK((antisymmetric_part(f, y) - antisymmetric_part_fd(f, y, 1.0 / 512)).norm() <= 1e-5);
}

TEST_CASE("elasticity deviation shrinks by four per halving of b") {
  const Vec2 x(0.1, 0.6);
  const Vec2 xi(0.3, 0.8);
  std::vector<double> dev;
  for (double b : {0.2, 0.1, 0.05}) {
    const auto f = FinslerStructure::constant_randers(0.0, b);
    const Mat2 c = elasticity_tensor(f, x, xi);
    const Mat2 s = symmetric_correction(Mat2::Identity(), Vec2(0.0, b), xi);
    dev.push_back((c - (Mat2::Identity() - s)).norm());
  }
  CHECK(dev[0] / dev[1] == Approx(4.0).epsilon(0.3));
  CHECK(dev[1] / dev[2] == Approx(4.0).epsilon(0.3));
}

TEST_CASE("measure densities") {
  const Vec2 x(0.5, 0.5);
  for (auto m : {MeasureKind::BusemannHausdorff, MeasureKind::HolmesThompson}) {
    CHECK(measure_density(FinslerStructure::identity(m), x) == Approx(1.0).epsilon(1e-10));
    CHECK(measure_density(FinslerStructure::diagonal(4, 1, m), x) == Approx(2.0).epsilon(1e-10));
  }
  const auto bh = FinslerStructure::constant_randers(0.3, 0.0, MeasureKind::BusemannHausdorff);
  CHECK(std::abs(measure_density(bh, x) - std::pow(1.0 - 0.09, 1.5)) <= 1e-6);
  // The co-indicatrix of a Randers norm with a = I is the unit disk shifted by b.
  const auto ht = FinslerStructure::constant_randers(0.3, 0.0, MeasureKind::HolmesThompson);
  CHECK(std::abs(measure_density(ht, x) - 1.0) <= 1e-6);
}

TEST_CASE("local distance") {
  const auto id = FinslerStructure::identity();
  CHECK(local_distance(id, {0, 0}, {0.1, 0}) == Approx(0.1));
  CHECK(local_distance(id, {0.95, 0}, {0.05, 0}) == Approx(0.1));
  const auto r = FinslerStructure::constant_randers(0.5, 0.0);
  CHECK(local_distance(r, {0.5, 0.5}, {0.6, 0.5}) == Approx(0.15));
  CHECK(local_distance(r, {0.5, 0.5}, {0.4, 0.5}) == Approx(0.05));
  CHECK_THROWS_AS(local_distance(id, {0, 0}, {0.3, 0}), DistanceOutOfRange);
}

TEST_CASE("tensors converge linearly to the Riemannian ones as b -> 0") {
  const Vec2 x(0.3, 0.3);
  const Vec2 xi(0.5, -1.0);
  std::vector<std::pair<double, double>> pts;
  for (double b : {0.1, 0.05, 0.025}) {
    pts.emplace_back(b, (hessian_tensor(FinslerStructure::constant_randers(b, b), x, xi) -
                         Mat2::Identity()).norm());
  }
  CHECK(oracle::order_fit(pts) == Approx(1.0).epsilon(0.1));
}

TEST_CASE("mobility laws") {
  const Vec2 x(0.2, 0.9);
  const Vec2 xi(1.0, 2.0);
  const auto d = FinslerStructure::diagonal(4, 1);
  CHECK((mobility_additive(d, x, xi) - Vec2(0.25, 1.0).asDiagonal().toDenseMatrix()).norm() <= 1e-14);
  CHECK((mobility_inverse(d, x, xi) - Vec2(4.0, 1.0).asDiagonal().toDenseMatrix()).norm() <= 1e-12);
  const auto r = FinslerStructure::constant_randers(0.1, 0.0);
  CHECK((mobility_additive(r, x, {0, 0}) - Mat2::Identity()).norm() <= 1e-14);
}
