#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "fvortex/solver.hpp"
#include "fvortex/torus_grid.hpp"

namespace fvortex {

class TranslationKernel;

/// Cached fields are dropped wholesale beyond this count.
inline constexpr std::size_t kFieldCacheLimit = 1024;

/// Computes and caches normalized Green fields G(., y). Fields for
/// constant-coefficient structures are shared across sources that differ by
/// grid translations; for Riemannian ones every hat source is assembled from
/// the single node-source solution by linearity.
class GreenSolver {
 public:
  explicit GreenSolver(std::shared_ptr<const TorusGrid> grid, SolverOptions options = {},
                       int threads = 1);

  const TorusGrid& grid() const noexcept { return form_->grid(); }
  std::shared_ptr<const TorusGrid> grid_ptr() const noexcept { return form_->grid_ptr(); }
  const FinslerStructure& structure() const noexcept { return grid().structure(); }
  const MeanZeroSolver& solver() const noexcept { return solver_; }
  int threads() const noexcept { return threads_; }

  /// Mean-zero solution of -Delta G = delta_y - 1/Vol. Thread-safe.
  std::shared_ptr<const ScalarField> field(const Vec2& source);
  /// Solve every missing source, in parallel when threads > 1.
  void prefetch(const std::vector<Vec2>& sources);

  /// One nonlinear solve with load sum_j d_j (delta_{y_j} - 1/Vol).
  ScalarField combined_field(const std::vector<Vec2>& sources, const std::vector<int>& degrees) const;

  std::size_t solves() const noexcept { return solves_; }

  /// Shared translation kernel; null unless coefficients are constant.
  std::shared_ptr<const TranslationKernel> translation();

 private:
  using Key = std::array<std::int64_t, 2>;
  ScalarField solve_direct(const Vec2& source) const;
  ScalarField shifted(const ScalarField& base, int di, int dj) const;
  void trim_cache();

  std::shared_ptr<const DirichletForm> form_;
  MeanZeroSolver solver_;
  int threads_;
  bool shift_invariant_;
  bool linear_;
  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const ScalarField>> cache_;
  std::shared_ptr<const ScalarField> node_field_;  // linear shift-invariant case
  std::shared_ptr<const TranslationKernel> translation_;
  std::size_t solves_ = 0;
};

/// Solved kernel for a list of sources.
struct GreenKernel {
  std::shared_ptr<const TorusGrid> grid;
  std::vector<Vec2> sources;
  std::vector<std::shared_ptr<const ScalarField>> fields;

  const FinslerStructure& structure() const { return grid->structure(); }
};

GreenKernel solve_green(GreenSolver& solver, const std::vector<Vec2>& sources);

struct RingFit {
  std::vector<double> radii;
  std::vector<double> ring_means;  // angular means of the sampled quantity
  double value = 0.0;              // extrapolation to r = 0
  double linear = 0.0;             // c1
  double quadratic = 0.0;          // c2
  double residual = 0.0;           // rms residual of the fit
  bool flagged = false;
};

struct RegularPart {
  Vec2 at;
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  RingFit fit;
};

/// Ring radii in units of h and samples per ring.
inline constexpr std::array<int, 5> kRingMultiples{4, 6, 8, 12, 16};
inline constexpr int kRingSamples = 64;

/// Ring-averaged R = G + log(d_F) / (2 pi), fitted by H + c1 r + c2 r^2.
/// Rings beyond the local-distance limit are dropped; at least three must
/// remain.
RingFit fit_regular_value(const TorusGrid& grid, const ScalarField& field, const Vec2& source);

/// H_F(y, y) with the gradient of y -> H_F(y, y) by central differences of
/// step 2h over re-solved sources.
RegularPart extract_regular_part(GreenSolver& solver, const Vec2& source);
RegularPart extract_regular_part(GreenSolver& solver, const GreenKernel& kernel, std::size_t at);

/// d_x G(x, y_j) by bicubic interpolation; rejects points within 4h of y_j.
Vec2 kernel_gradient(const GreenKernel& kernel, std::size_t j, const Vec2& x);
double kernel_value(const GreenKernel& kernel, std::size_t j, const Vec2& x);

struct LogCoefficientFit {
  double lambda = 0.0;  // G ~ -(lambda / 2 pi) log d_F
  double regular = 0.0;
  double residual = 0.0;
};

/// Fits ring means of G against {<log d_F>, 1, r, r^2}.
LogCoefficientFit fit_log_coefficient(const TorusGrid& grid, const ScalarField& field,
                                      const Vec2& source);

/// For constant coefficients G(x; y) = T(x - y), with T the bicubic
/// interpolant of the node-source field. Exactly translation invariant.
class TranslationKernel {
 public:
  explicit TranslationKernel(GreenSolver& solver);

  double value(const Vec2& z) const;
  Vec2 gradient(const Vec2& z) const;
  /// Jacobian of `gradient` by central differences of step 2h; column l is
  /// the derivative along z^l.
  Mat2 hessian(const Vec2& z) const;
  /// H_F(y, y), the same for every y.
  double regular_value() const noexcept { return fit_.value; }
  const RingFit& regular_fit() const noexcept { return fit_; }

 private:
  std::shared_ptr<const TorusGrid> grid_;
  std::shared_ptr<const ScalarField> field_;
  RingFit fit_;
};

}  // namespace fvortex
