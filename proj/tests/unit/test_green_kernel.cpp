#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "fvortex/errors.hpp"
#include "fvortex/green_kernel.hpp"
#include "fvortex/oracle/order_fit.hpp"
#include "fvortex/oracle/spectral_green.hpp"

using namespace fvortex;
using doctest::Approx;

namespace {

GreenSolver make_solver(const FinslerStructure& f, int n) {
  return GreenSolver(std::make_shared<TorusGrid>(f, n));
}

double oracle_defect(int n) {
  GreenSolver s = make_solver(FinslerStructure::identity(), n);
  const Vec2 y = s.grid().node(n / 4, n / 8);
  const auto g_ptr = s.field(y);
  const ScalarField& g = *g_ptr;
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = s.grid().node(k);
    if (torus_separation(x, y) < 4.0 * s.grid().h() - 1e-12) continue;
    worst = std::max(worst, std::abs(g[k] - oracle::iso_green(x, y)));
  }
  return worst;
}

}  // namespace

TEST_CASE("identity kernel against the spectral oracle") {
  std::vector<std::pair<double, double>> ladder;
  for (int n : {32, 64}) ladder.emplace_back(1.0 / n, oracle_defect(n));
  ladder.emplace_back(1.0 / 128, oracle_defect(128));
  CHECK(ladder.back().second <= 5e-4);
  const double p = oracle::order_fit(ladder);
  CHECK(p >= 1.7);
  CHECK(p <= 2.3);
}

TEST_CASE("normalization and symmetry") {
  for (auto f : {FinslerStructure::modulated(0.3), FinslerStructure::diagonal(4, 1)}) {
    GreenSolver s = make_solver(f, 32);
    const TorusGrid& g = s.grid();
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> pick(0, 31);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vec2 a = g.node(pick(rng), pick(rng));
      const Vec2 b = g.node(pick(rng), pick(rng));
      if (torus_separation(a, b) < 1e-9) continue;
      const auto ga_ptr = s.field(a);
      const auto gb_ptr = s.field(b);
      const ScalarField& ga = *ga_ptr;
      const ScalarField& gb = *gb_ptr;
      CHECK(std::abs(g.mean(ga)) <= 1e-10 * ga.cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(interpolate(g, ga, b) - interpolate(g, gb, a)));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("superposed hat sources equal direct solves") {
  GreenSolver s = make_solver(FinslerStructure::diagonal(2, 0.7), 32);
  const Vec2 y(0.3141, 0.2718);
  const auto fast_ptr = s.field(y);
  const ScalarField& fast = *fast_ptr;
  const ScalarField direct =
      s.solver().solve_load(source_load(s.grid(), make_delta(s.grid(), y)));
  CHECK((fast - direct).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("Randers shift cache equals direct solves") {
  GreenSolver s = make_solver(FinslerStructure::constant_randers(0.2, 0.1), 32);
  const Vec2 y(0.71, 0.33);
  const auto cached_ptr = s.field(y);
  const ScalarField& cached = *cached_ptr;
  const ScalarField direct =
      s.solver().solve_load(source_load(s.grid(), make_delta(s.grid(), y)));
  CHECK((cached - direct).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("translation invariance of constant-coefficient kernels") {
  GreenSolver s = make_solver(FinslerStructure::diagonal(4, 1), 128);
  const double h = s.grid().h();
  auto defect = [&](const Vec2& y1, const Vec2& y2) {
    const auto g1 = s.field(y1);
    const auto g2 = s.field(y2);
    double worst = 0.0;
    for (const Vec2 d : {Vec2(0.1, 0.05), Vec2(-0.3, 0.2), Vec2(0.45, -0.4)}) {
      worst = std::max(worst, std::abs(interpolate(s.grid(), *g1, y1 + d) -
                                       interpolate(s.grid(), *g2, y2 + d)));
    }
    return worst;
  };
  // Sources differing by grid vectors give exactly shifted fields; otherwise
  // the hat regularization differs at O(h^2).
  CHECK(defect(Vec2(0.2, 0.3) + Vec2(0.3, 0.1) * h, Vec2(0.2 + 11 * h, 0.3 - 5 * h) + Vec2(0.3, 0.1) * h) <= 1e-12);
  CHECK(defect({0.2, 0.3}, {0.63, 0.81}) <= 1e-4);
}

TEST_CASE("regular part on the identity structure") {
  GreenSolver s = make_solver(FinslerStructure::identity(), 128);
  const RegularPart rp = extract_regular_part(s, {0.37, 0.61});
  CHECK(std::abs(rp.value - oracle::iso_regular_part()) <= 5e-3);
  CHECK(rp.gradient.norm() <= 1e-4);
  CHECK_FALSE(rp.fit.flagged);
  CHECK(rp.fit.radii.size() == 5);
}

TEST_CASE("regular part is translation invariant for constant Randers") {
  GreenSolver s = make_solver(FinslerStructure::constant_randers(0.1, 0.0), 128);
  const RegularPart a = extract_regular_part(s, {0.2, 0.2});
  const RegularPart b = extract_regular_part(s, {0.7, 0.45});
  CHECK(a.gradient.norm() <= 1e-4);
  CHECK(std::abs(a.value - b.value) <= 1e-6);
}

TEST_CASE("measure swap shifts the regular part by a constant") {
  const auto bh = FinslerStructure::diagonal(4, 1, MeasureKind::BusemannHausdorff);
  const auto ht = bh.with_measure(MeasureKind::HolmesThompson);
  GreenSolver sb = make_solver(bh, 128), sh = make_solver(ht, 128);
  const Vec2 p(0.3, 0.6), q(0.81, 0.12);
  const double d1 = extract_regular_part(sb, p).value - extract_regular_part(sh, p).value;
  const double d2 = extract_regular_part(sb, q).value - extract_regular_part(sh, q).value;
  CHECK(std::abs(d1 - d2) <= 1e-8);
}

TEST_CASE("coarse grids cannot host the extraction rings") {
  GreenSolver s = make_solver(FinslerStructure::identity(), 32);
  CHECK_THROWS_AS(extract_regular_part(s, {0.5, 0.5}), SeparationTooSmall);
}

TEST_CASE("kernel gradient") {
  GreenSolver s = make_solver(FinslerStructure::identity(), 128);
  const Vec2 y(0.25, 0.5);
  const GreenKernel k = solve_green(s, {y});
  const Vec2 anti = kernel_gradient(k, 0, y + Vec2(0.5, 0.5));
  CHECK(anti.norm() <= 1e-10);
  double worst = 0.0;
  for (const Vec2 x : {Vec2(0.41, 0.52), Vec2(0.9, 0.1), Vec2(0.3, 0.8)}) {
    worst = std::max(worst, (kernel_gradient(k, 0, x) - oracle::iso_green_gradient(x, y)).norm());
  }
  CHECK(worst <= 5e-3);
  CHECK_THROWS_AS(kernel_gradient(k, 0, y + Vec2(2.0 * s.grid().h(), 0.0)), TooCloseToCore);

  GreenSolver d = make_solver(FinslerStructure::diagonal(4, 1), 64);
  const GreenKernel kd = solve_green(d, {y});
  const Vec2 gd = kernel_gradient(kd, 0, y + Vec2(0.15, 0.0));
  CHECK(std::abs(gd[1]) <= 1e-10 * std::abs(gd[0]));
}

TEST_CASE("logarithmic coefficient") {
  const Vec2 y(0.5, 0.5);
  for (auto f : {FinslerStructure::identity(), FinslerStructure::diagonal(4, 1),
                 FinslerStructure::constant_randers(0.2, 0.0, MeasureKind::BusemannHausdorff)}) {
    GreenSolver s = make_solver(f, 128);
    const LogCoefficientFit fit = fit_log_coefficient(s.grid(), *s.field(y), y);
    CHECK(fit.lambda == Approx(1.0).epsilon(0.02));
  }
  // Under the Holmes-Thompson density the Randers coefficient is
  // 2 pi / (2 sigma |{F <= 1}|) = (1 - |b|^2)^{3/2}.
  GreenSolver s = make_solver(FinslerStructure::constant_randers(0.2, 0.0), 128);
  const LogCoefficientFit ht = fit_log_coefficient(s.grid(), *s.field(y), y);
  CHECK(ht.lambda == Approx(std::pow(0.96, 1.5)).epsilon(0.02));
}
