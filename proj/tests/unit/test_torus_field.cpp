#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "fvortex/dirichlet_form.hpp"
#include "fvortex/errors.hpp"
#include "fvortex/oracle/order_fit.hpp"
#include "fvortex/solver.hpp"
#include "fvortex/torus_grid.hpp"

using namespace fvortex;
using doctest::Approx;

namespace {

std::shared_ptr<const DirichletForm> make_form(const FinslerStructure& f, int n) {
  return std::make_shared<DirichletForm>(std::make_shared<TorusGrid>(f, n));
}

ScalarField cos_mode(const TorusGrid& g) {
  return g.sample([](const Vec2& x) { return std::cos(2.0 * kPi * x[0]); });
}

ScalarField random_field(const TorusGrid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ScalarField u(g.size());
  for (auto& v : u) v = nd(rng);
  return u;
}

}  // namespace

TEST_CASE("grid construction") {
  CHECK_THROWS_AS(TorusGrid(FinslerStructure::identity(), 15), ValidationError);
  CHECK_THROWS_AS(TorusGrid(FinslerStructure::identity(), 8), ValidationError);
  const TorusGrid g(FinslerStructure::diagonal(4, 1), 32);
  CHECK(g.volume() == Approx(2.0).epsilon(1e-10));
  CHECK(g.weights().minCoeff() > 0.0);
  const TorusGrid m(FinslerStructure::modulated(0.3), 32);
  CHECK(m.weights().minCoeff() > 0.0);
}

TEST_CASE("delta weights") {
  const TorusGrid g(FinslerStructure::identity(), 32);
  const DiscreteDelta node = make_delta(g, {5.0 / 32, 7.0 / 32});
  REQUIRE(node.weights.size() == 1);
  CHECK(node.weights[0].second == 1.0);
  CHECK(node.weights[0].first == g.index(5, 7));
  const DiscreteDelta mid = make_delta(g, {5.5 / 32, 31.5 / 32});
  REQUIRE(mid.weights.size() == 4);
  for (const auto& [k, w] : mid.weights) CHECK(w == Approx(0.25));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst_sum = 0.0, worst_moment = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec2 c(u(rng), u(rng));
    const DiscreteDelta d = make_delta(g, c);
    double s = 0.0;
    Vec2 m = Vec2::Zero();
    for (const auto& [idx, w] : d.weights) {
      s += w;
      m += w * min_image(g.node(idx) - c);
    }
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    worst_moment = std::max(worst_moment, m.norm());
  }
  CHECK(worst_sum <= 1e-14);
  CHECK(worst_moment <= 1e-12);
  const Eigen::VectorXd load = source_load(g, make_delta(g, {0.3, 0.4}));
  CHECK(std::abs(load.sum()) <= 1e-15);
}

TEST_CASE("interpolation") {
  const TorusGrid g(FinslerStructure::identity(), 64);
  const ScalarField c = ScalarField::Constant(g.size(), 2.5);
  CHECK(interpolate(g, c, {0.123, 0.77}) == Approx(2.5));
  CHECK(interpolate_gradient(g, c, {0.123, 0.77}).norm() <= 1e-12);

  const ScalarField u = cos_mode(g);
  const Vec2 d = interpolate_gradient(g, u, {0.25, 0.4});
  // At a node the bicubic slope is the central difference, error (2 pi)^3 h^2 / 6.
  CHECK(std::abs(d[0] + 2.0 * kPi) <= 50.0 * g.h() * g.h());
  CHECK(std::abs(d[1]) <= 1e-12);

  const ScalarField r = random_field(g, 4);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t idx = (k * 977) % g.size();
    worst = std::max(worst, std::abs(interpolate(g, r, g.node(idx)) - r[idx]));
  }
  CHECK(worst <= 1e-13);

  // A field linear on the covering patch around the evaluation point.
  ScalarField lin(g.size());
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) lin[g.index(i, j)] = 0.3 * i * g.h() - 1.7 * j * g.h();
  const Vec2 gl = interpolate_gradient(g, lin, {0.41, 0.52});
  CHECK(gl[0] == Approx(0.3).epsilon(1e-12));
  CHECK(gl[1] == Approx(-1.7).epsilon(1e-12));
}

TEST_CASE("weak Laplacian on Fourier modes") {
  for (auto f : {FinslerStructure::identity(), FinslerStructure::constant_randers(0.2, 0.1)}) {
    const auto form = make_form(f, 32);
    const ScalarField c = ScalarField::Constant(form->grid().size(), -1.3);
    CHECK(assemble_weak_laplacian(*form, c).cwiseAbs().maxCoeff() <= 1e-9);
  }
  std::vector<std::pair<double, double>> ladder;
  for (int n : {32, 64, 128}) {
    const auto form = make_form(FinslerStructure::identity(), n);
    const ScalarField u = cos_mode(form->grid());
    const double err = (assemble_weak_laplacian(*form, u) - 4.0 * kPi * kPi * u).cwiseAbs().maxCoeff();
    ladder.emplace_back(1.0 / n, err);
  }
  const double p = oracle::order_fit(ladder);
  CHECK(p >= 1.7);
  CHECK(p <= 2.3);

  // Constant a = diag(4, 1): -div(a^-1 grad u) = (4 pi^2 / 4) u, against the
  // density sigma = 2 carried by both sides.
  std::vector<std::pair<double, double>> diag;
  for (int n : {32, 64, 128}) {
    const auto form = make_form(FinslerStructure::diagonal(4, 1), n);
    const ScalarField u = cos_mode(form->grid());
    const double err = (assemble_weak_laplacian(*form, u) - kPi * kPi * u).cwiseAbs().maxCoeff();
    diag.emplace_back(1.0 / n, err);
  }
  CHECK(diag.back().second <= 1e-2);
  CHECK(oracle::order_fit(diag) >= 1.7);
}

TEST_CASE("Dirichlet energy") {
  const auto form = make_form(FinslerStructure::identity(), 64);
  const ScalarField u = cos_mode(form->grid());
  CHECK(dirichlet_energy(*form, ScalarField::Constant(u.size(), 3.0)) == Approx(0.0));
  CHECK(dirichlet_energy(*form, u) == Approx(kPi * kPi).epsilon(5e-3));
  const auto d = make_form(FinslerStructure::diagonal(2, 3), 32);
  const ScalarField r = random_field(d->grid(), 2);
  CHECK(dirichlet_energy(*d, 3.0 * r) == Approx(9.0 * dirichlet_energy(*d, r)).epsilon(1e-12));
}

TEST_CASE("tangent operator") {
  const auto riem = make_form(FinslerStructure::modulated(0.3), 32);
  const ScalarField r1 = random_field(riem->grid(), 1);
  const ScalarField r2 = random_field(riem->grid(), 2);
  const ScalarField r3 = random_field(riem->grid(), 3);
  const auto t1 = tangent_operator(*riem, r1);
  const auto t2 = tangent_operator(*riem, r2);
  CHECK((t1.apply(r3) - t2.apply(r3)).norm() <= 1e-12 * t1.apply(r3).norm());

  // Discrete integration by parts for the Riemannian residual.
  const double lhs = riem->grid().inner(assemble_weak_laplacian(*riem, r1), r2);
  const double rhs = riem->grid().inner(assemble_weak_laplacian(*riem, r2), r1);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));

  const auto rand = make_form(FinslerStructure::shear_randers(0.8), 32);
  const ScalarField base = random_field(rand->grid(), 7);
  const auto t = tangent_operator(*rand, base);
  const ScalarField c = ScalarField::Constant(base.size(), 1.0);
  CHECK(t.apply(c).cwiseAbs().maxCoeff() <= 1e-9);
  const double a = r1.dot(t.apply(r2));
  const double b = r2.dot(t.apply(r1));
  CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
  CHECK(r1.dot(t.apply(r1)) > 0.0);

  // The tangent is the derivative of the energy gradient.
  const double eps = 1e-6;
  const Eigen::VectorXd fd =
      (rand->energy_gradient(base + eps * r2) - rand->energy_gradient(base - eps * r2)) / (2 * eps);
  CHECK((fd - t.apply(r2)).norm() <= 1e-6 * fd.norm());

  const Eigen::SparseMatrix<double> s = t.to_sparse();
  CHECK((s * r3 - t.apply(r3)).norm() <= 1e-12 * t.apply(r3).norm());
}

TEST_CASE("mean-zero solves") {
  const auto form = make_form(FinslerStructure::identity(), 64);
  MeanZeroSolver solver(form);
  const ScalarField zero = solver.solve(ScalarField::Zero(form->grid().size()));
  CHECK(zero.norm() == 0.0);

  std::vector<std::pair<double, double>> ladder;
  for (int n : {32, 64, 128}) {
    const auto f = make_form(FinslerStructure::identity(), n);
    const ScalarField rhs = cos_mode(f->grid());
    const ScalarField u = MeanZeroSolver(f).solve(rhs);
    ladder.emplace_back(1.0 / n, (u - rhs / (4.0 * kPi * kPi)).cwiseAbs().maxCoeff());
  }
  CHECK(oracle::order_fit(ladder) >= 1.7);
  CHECK(oracle::order_fit(ladder) <= 2.3);

  CHECK_THROWS_AS(solver.solve(ScalarField::Constant(form->grid().size(), 1.0)), NonNeutralSource);
}

TEST_CASE("solve inverts the weak Laplacian on mean-zero fields") {
  const auto form = make_form(FinslerStructure::modulated(0.3), 32);
  const TorusGrid& g = form->grid();
  const ScalarField u = g.project_mean_zero(random_field(g, 12));
  const ScalarField back = MeanZeroSolver(form).solve(assemble_weak_laplacian(*form, u));
  CHECK((back - u).norm() <= 1e-8 * u.norm());
}

TEST_CASE("Randers solve and perturbation oracle") {
  // Constant b: the alpha-solution is correct to O(|b|), and one correction
  // solve of the linearized problem makes it O(|b|^2).
  const int n = 32;
  std::vector<double> first, second;
  for (double b : {0.1, 0.05, 0.025}) {
    const auto f = make_form(FinslerStructure::constant_randers(b, 0.0), n);
    const TorusGrid& g = f->grid();
    const ScalarField rhs = g.project_mean_zero(g.sample([](const Vec2& x) {
      return std::cos(2 * kPi * x[0]) + 0.5 * std::sin(2 * kPi * (x[0] + 2 * x[1]));
    }));
    SolveStats st;
    MeanZeroSolver solver(f);
    const ScalarField u = solver.solve(rhs, &st);
    CHECK(st.relative_residual <= 1e-9);
    CHECK(std::abs(g.mean(u)) <= 1e-14);

    // Alpha solve: same grid and measure, a^-1 everywhere.
    const Eigen::VectorXd load = g.weights().cwiseProduct(rhs);
    const auto alpha = f->alpha_tangent();
    auto cg = [&](const TangentOperator& op, Eigen::VectorXd b0) {
      b0.array() -= b0.sum() / b0.size();
      Eigen::SparseMatrix<double> m = op.to_sparse();
      Eigen::MatrixXd dense = Eigen::MatrixXd(m);
      dense.array() += 1.0;  // pin the constant mode
      return Eigen::VectorXd(dense.ldlt().solve(b0));
    };
    ScalarField u0 = g.project_mean_zero(cg(alpha, load));
    // Newton correction from u0: T(u0) du = load - E'(u0).
    ScalarField u1 = g.project_mean_zero(u0 + cg(f->tangent(u0), load - f->energy_gradient(u0)));
    first.push_back((u - u0).cwiseAbs().maxCoeff());
    second.push_back((u - u1).cwiseAbs().maxCoeff());
  }
  CHECK(first[0] / first[1] == Approx(2.0).epsilon(0.2));
  CHECK(second[0] / second[1] >= 3.5);
  CHECK(second[1] / second[2] >= 3.5);
}

TEST_CASE("translation equivariance on constant coefficients") {
  const auto f = make_form(FinslerStructure::constant_randers(0.15, -0.1), 32);
  const TorusGrid& g = f->grid();
  MeanZeroSolver solver(f);
  const ScalarField a = solver.solve_load(source_load(g, make_delta(g, g.node(3, 5))));
  const ScalarField b = solver.solve_load(source_load(g, make_delta(g, g.node(10, 1))));
  double worst = 0.0;
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i)
      worst = std::max(worst, std::abs(a[g.index(i, j)] - b[g.index(i + 7, j - 4)]));
  CHECK(worst <= 1e-8);
}
