#include <memory>

#include <benchmark/benchmark.h>

#include "fvortex/dynamics.hpp"
#include "fvortex/finsler.hpp"
#include "fvortex/stability.hpp"

using namespace fvortex;

namespace {

FinslerStructure structure(int which) {
  switch (which) {
    case 0: return FinslerStructure::identity();
    case 1: return FinslerStructure::modulated(0.3);
    default: return FinslerStructure::shear_randers(0.2);
  }
}

VortexConfiguration checkerboard() {
  VortexConfiguration c;
  c.positions = {{0.23, 0.27}, {0.74, 0.22}, {0.27, 0.78}, {0.71, 0.73}};
  c.degrees = {1, -1, -1, 1};
  return c;
}

// One uncached single-source solve.
void BM_GreenSolve(benchmark::State& state) {
  const auto grid = std::make_shared<TorusGrid>(structure(static_cast<int>(state.range(0))),
                                                static_cast<int>(state.range(1)));
  double shift = 0.0;
  for (auto _ : state) {
    GreenSolver s(grid);
    shift += 1e-3;
    benchmark::DoNotOptimize(s.field({0.31 + shift, 0.42}));
  }
  state.SetLabel(grid->structure().describe());
}
BENCHMARK(BM_GreenSolve)
    ->ArgsProduct({{0, 1, 2}, {64, 128}})
    ->Unit(benchmark::kMillisecond);

void BM_DualNorm(benchmark::State& state) {
  const DualNorm n(Mat2::Identity(), Vec2(0.1, 0.05), MetricKind::Randers);
  Vec2 xi(0.3, -0.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(n.hessian(xi));
    xi[0] += 1e-9;
  }
}
BENCHMARK(BM_DualNorm);

void BM_EnergyGradient(benchmark::State& state) {
  const auto grid = std::make_shared<TorusGrid>(structure(static_cast<int>(state.range(0))), 64);
  for (auto _ : state) {
    GreenSolver s(grid, {}, 4);
    EnergyModel m(s);
    benchmark::DoNotOptimize(m.report(checkerboard(), true, false));
  }
  state.SetLabel(grid->structure().describe());
}
BENCHMARK(BM_EnergyGradient)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_StabilitySpectrum(benchmark::State& state) {
  const auto grid = std::make_shared<TorusGrid>(FinslerStructure::diagonal(4, 1), 128);
  VortexConfiguration c;
  c.positions = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  c.degrees = {1, -1, -1, 1};
  for (auto _ : state) {
    GreenSolver s(grid);
    benchmark::DoNotOptimize(stability_spectrum(s, c));
  }
}
BENCHMARK(BM_StabilitySpectrum)->Unit(benchmark::kMillisecond);

void BM_FlowStep(benchmark::State& state) {
  GreenSolver s(std::make_shared<TorusGrid>(structure(static_cast<int>(state.range(0))), 64), {}, 4);
  const VortexConfiguration c = checkerboard();
  for (auto _ : state) benchmark::DoNotOptimize(flow_step(s, c, 1e-4));
  state.SetLabel(s.structure().describe());
}
BENCHMARK(BM_FlowStep)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
