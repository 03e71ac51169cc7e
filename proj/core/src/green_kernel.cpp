#include "fvortex/green_kernel.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {
namespace {

constexpr double kKeyScale = 1099511627776.0;  // 2^40

std::int64_t quantize(double t) { return static_cast<std::int64_t>(std::llround(t * kKeyScale)); }

}  // namespace

GreenSolver::GreenSolver(std::shared_ptr<const TorusGrid> grid, SolverOptions options, int threads)
    : form_(std::make_shared<DirichletForm>(std::move(grid))),
      solver_(form_, options),
      threads_(std::max(1, threads)),
      shift_invariant_(form_->grid().structure().constant_coefficients()),
      linear_(form_->linear()) {}

// Called with the mutex held. Fields in use stay alive through their
// shared pointers.
void GreenSolver::trim_cache() {
  if (cache_.size() >= kFieldCacheLimit) cache_.clear();
}

std::shared_ptr<const TranslationKernel> GreenSolver::translation() {
  if (!shift_invariant_) return nullptr;
  {
    std::lock_guard lock(mutex_);
    if (translation_) return translation_;
  }
  auto built = std::make_shared<const TranslationKernel>(*this);
  std::lock_guard lock(mutex_);
  if (!translation_) translation_ = std::move(built);
  return translation_;
}

ScalarField GreenSolver::solve_direct(const Vec2& source) const {
  const TorusGrid& g = grid();
  return solver_.solve_load(source_load(g, make_delta(g, source)));
}

ScalarField GreenSolver::shifted(const ScalarField& base, int di, int dj) const {
  const TorusGrid& g = grid();
  ScalarField out(base.size());
  for (int j = 0; j < g.n(); ++j) {
    for (int i = 0; i < g.n(); ++i) out[g.index(i + di, j + dj)] = base[g.index(i, j)];
  }
  return out;
}

std::shared_ptr<const ScalarField> GreenSolver::field(const Vec2& source) {
  const TorusGrid& g = grid();
  const Vec2 y = wrap_point(source);

  if (shift_invariant_ && linear_) {
    const Key key{quantize(y[0]), quantize(y[1])};
    std::shared_ptr<const ScalarField> base;
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
      base = node_field_;
    }
    if (!base) {
      auto solved = std::make_shared<const ScalarField>(solve_direct(Vec2::Zero()));
      std::lock_guard lock(mutex_);
      ++solves_;
      if (!node_field_) node_field_ = solved;
      base = node_field_;
    }
    // Linearity and translation invariance: the hat source is a weighted sum
    // of node sources, each a shift of the node-0 field.
    ScalarField sum = ScalarField::Zero(g.size());
    for (const auto& [k, w] : make_delta(g, y).weights) {
      const int di = static_cast<int>(k % g.n());
      const int dj = static_cast<int>(k / g.n());
      sum += w * shifted(*base, di, dj);
    }
    auto out = std::make_shared<const ScalarField>(std::move(sum));
    std::lock_guard lock(mutex_);
    trim_cache();
    return cache_.emplace(key, out).first->second;
  }

  if (shift_invariant_) {
    // Reduce to the cell at the origin; fields for sources differing by grid
    // vectors are exact shifts of each other.
    const double gx = y[0] * g.n();
    const double gy = y[1] * g.n();
    int i0 = static_cast<int>(std::floor(gx));
    int j0 = static_cast<int>(std::floor(gy));
    std::int64_t fx = quantize(gx - i0);
    std::int64_t fy = quantize(gy - j0);
    if (fx >= static_cast<std::int64_t>(kKeyScale)) { fx = 0; ++i0; }
    if (fy >= static_cast<std::int64_t>(kKeyScale)) { fy = 0; ++j0; }
    const Key base_key{fx, fy};
    std::shared_ptr<const ScalarField> base;
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(base_key); it != cache_.end()) base = it->second;
    }
    if (!base) {
      const Vec2 local(static_cast<double>(fx) / kKeyScale * g.h(),
                       static_cast<double>(fy) / kKeyScale * g.h());
      auto solved = std::make_shared<const ScalarField>(solve_direct(local));
      std::lock_guard lock(mutex_);
      ++solves_;
      trim_cache();
      base = cache_.emplace(base_key, solved).first->second;
    }
    if (i0 % g.n() == 0 && j0 % g.n() == 0) return base;
    return std::make_shared<const ScalarField>(shifted(*base, i0, j0));
  }

  const Key key{quantize(y[0]), quantize(y[1])};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto solved = std::make_shared<const ScalarField>(solve_direct(y));
  std::lock_guard lock(mutex_);
  ++solves_;
  trim_cache();
  return cache_.emplace(key, solved).first->second;
}

void GreenSolver::prefetch(const std::vector<Vec2>& sources) {
  if (threads_ <= 1 || sources.size() <= 1) {
    for (const Vec2& y : sources) field(y);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(sources.size());
  auto worker = [&] {
    for (std::size_t k = next++; k < sources.size(); k = next++) {
      try {
        field(sources[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(threads_, static_cast<int>(sources.size()));
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ScalarField GreenSolver::combined_field(const std::vector<Vec2>& sources,
                                        const std::vector<int>& degrees) const {
  const TorusGrid& g = grid();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(g.size());
  for (std::size_t j = 0; j < sources.size(); ++j) {
    load += degrees[j] * source_load(g, make_delta(g, sources[j]));
  }
  load.array() -= load.sum() / static_cast<double>(load.size());
  return solver_.solve_load(load);
}

GreenKernel solve_green(GreenSolver& solver, const std::vector<Vec2>& sources) {
  GreenKernel k{solver.grid_ptr(), sources, {}};
  solver.prefetch(sources);
  for (std::size_t j = 0; j < sources.size(); ++j) {
    try {
      k.fields.push_back(solver.field(sources[j]));
    } catch (const NewtonStall& e) {
      throw NewtonStall(fmt::format("source {}: {}", j, e.what()), e.last_residual());
    } catch (const SolverDiverged& e) {
      throw SolverDiverged(fmt::format("source {}: {}", j, e.what()));
    }
  }
  return k;
}

namespace {

struct Ring {
  double radius;
  double mean_g;
  double mean_log_d;
};

std::vector<Ring> sample_rings(const TorusGrid& grid, const ScalarField& field, const Vec2& y) {
  std::vector<Ring> rings;
  for (int m : kRingMultiples) {
    const double r = m * grid.h();
    if (r >= kLocalDistanceLimit) continue;
    double sg = 0.0, sl = 0.0;
    for (int k = 0; k < kRingSamples; ++k) {
      const double th = 2.0 * kPi * (k + 0.5) / kRingSamples;
      const Vec2 x = y + r * Vec2(std::cos(th), std::sin(th));
      sg += interpolate(grid, field, x);
      sl += std::log(local_distance(grid.structure(), y, x));
    }
    rings.push_back({r, sg / kRingSamples, sl / kRingSamples});
  }
  if (rings.size() < 3) {
    throw SeparationTooSmall(fmt::format(
        "regular-part extraction needs three rings below {} (h = {})", kLocalDistanceLimit,
        grid.h()));
  }
  return rings;
}

}  // namespace

RingFit fit_regular_value(const TorusGrid& grid, const ScalarField& field, const Vec2& source) {
  const std::vector<Ring> rings = sample_rings(grid, field, source);
  const Eigen::Index m = static_cast<Eigen::Index>(rings.size());
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd b(m);
  RingFit fit;
  for (Eigen::Index k = 0; k < m; ++k) {
    const Ring& r = rings[k];
    a.row(k) << 1.0, r.radius, r.radius * r.radius;
    b[k] = r.mean_g + r.mean_log_d / (2.0 * kPi);
    fit.radii.push_back(r.radius);
    fit.ring_means.push_back(b[k]);
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  fit.value = c[0];
  fit.linear = c[1];
  fit.quadratic = c[2];
  fit.residual = std::sqrt((a * c - b).squaredNorm() / static_cast<double>(m));
  if (!std::isfinite(fit.value) || !std::isfinite(fit.residual)) {
    throw FitDiverged("regular-part ring fit produced non-finite values");
  }
  fit.flagged = fit.residual > 1e-3 * std::abs(fit.value) + 1e-6;
  return fit;
}

RegularPart extract_regular_part(GreenSolver& solver, const Vec2& source) {
  const TorusGrid& g = solver.grid();
  RegularPart part;
  part.at = wrap_point(source);
  part.fit = fit_regular_value(g, *solver.field(part.at), part.at);
  part.value = part.fit.value;
  const double step = 2.0 * g.h();
  std::vector<Vec2> displaced;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = step;
    displaced.push_back(part.at + e);
    displaced.push_back(part.at - e);
  }
  solver.prefetch(displaced);
  for (int k = 0; k < 2; ++k) {
    const Vec2& yp = displaced[2 * k];
    const Vec2& ym = displaced[2 * k + 1];
    const double hp = fit_regular_value(g, *solver.field(yp), yp).value;
    const double hm = fit_regular_value(g, *solver.field(ym), ym).value;
    part.gradient[k] = (hp - hm) / (2.0 * step);
  }
  return part;
}

RegularPart extract_regular_part(GreenSolver& solver, const GreenKernel& kernel, std::size_t at) {
  return extract_regular_part(solver, kernel.sources.at(at));
}

namespace {

void check_core(const GreenKernel& kernel, std::size_t j, const Vec2& x) {
  const double sep = torus_separation(x, kernel.sources.at(j));
  if (sep < 4.0 * kernel.grid->h() * (1.0 - 1e-12)) {
    throw TooCloseToCore(fmt::format("point at distance {} from source {} (< 4h = {})", sep, j,
                                     4.0 * kernel.grid->h()));
  }
}

}  // namespace

Vec2 kernel_gradient(const GreenKernel& kernel, std::size_t j, const Vec2& x) {
  check_core(kernel, j, x);
  return interpolate_gradient(*kernel.grid, *kernel.fields.at(j), x);
}

double kernel_value(const GreenKernel& kernel, std::size_t j, const Vec2& x) {
  check_core(kernel, j, x);
  return interpolate(*kernel.grid, *kernel.fields.at(j), x);
}

LogCoefficientFit fit_log_coefficient(const TorusGrid& grid, const ScalarField& field,
                                      const Vec2& source) {
  const std::vector<Ring> rings = sample_rings(grid, field, source);
  const Eigen::Index m = static_cast<Eigen::Index>(rings.size());
  if (m < 5) throw SeparationTooSmall("log-coefficient fit needs five rings");
  Eigen::MatrixXd a(m, 4);
  Eigen::VectorXd b(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Ring& r = rings[k];
    a.row(k) << -r.mean_log_d / (2.0 * kPi), 1.0, r.radius, r.radius * r.radius;
    b[k] = r.mean_g;
  }
  const Eigen::Vector4d c = a.colPivHouseholderQr().solve(b);
  return {c[0], c[1], std::sqrt((a * c - b).squaredNorm() / static_cast<double>(m))};
}

// ---------------------------------------------------------------------------

TranslationKernel::TranslationKernel(GreenSolver& solver)
    : grid_(solver.grid_ptr()), field_(solver.field(Vec2::Zero())) {
  if (!solver.structure().constant_coefficients()) {
    throw ValidationError("translation kernel needs constant coefficients");
  }
  fit_ = fit_regular_value(*grid_, *field_, Vec2::Zero());
}

double TranslationKernel::value(const Vec2& z) const { return interpolate(*grid_, *field_, z); }

Vec2 TranslationKernel::gradient(const Vec2& z) const {
  return interpolate_gradient(*grid_, *field_, z);
}

Mat2 TranslationKernel::hessian(const Vec2& z) const {
  const double s = 2.0 * grid_->h();
  Mat2 out;
  for (int l = 0; l < 2; ++l) {
    Vec2 e = Vec2::Zero();
    e[l] = s;
    out.col(l) = (gradient(z + e) - gradient(z - e)) / (2.0 * s);
  }
  return out;
}

}  // namespace fvortex
