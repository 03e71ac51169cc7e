#pragma once

// Pointwise Finsler algebra on the flat 2-torus: primal and dual norms of
// Riemannian and Randers structures, the Legendre map, covector Hessians and
// the first-order Randers response operators.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fvortex/torus.hpp"

namespace fvortex {

enum class MetricKind { Riemannian, Randers };
enum class MeasureKind { BusemannHausdorff, HolmesThompson };

enum class Preset {
  Identity,         // a = I
  Diagonal,         // a = diag(l1, l2)
  ConstantRanders,  // a = I, b = (b1, b2)
  ShearRanders,     // a = I, b = (0, k sin(2 pi x1) / (2 pi))
  Modulated,        // smooth non-constant Riemannian a(x), amplitude A
};

std::string_view preset_name(Preset p);
std::string_view measure_name(MeasureKind m);

struct CoefficientSample {
  Mat2 alpha;          // a_ij(x)
  Vec2 beta;           // b_i(x)
  Mat2 beta_jacobian;  // (i, j) -> d b_i / d x^j
};

/// Immutable description of a 1-periodic Finsler structure built from a named
/// preset. Coefficients are closed-form, so derivatives of b are analytic.
class FinslerStructure {
 public:
  static FinslerStructure identity(MeasureKind m = MeasureKind::HolmesThompson);
  static FinslerStructure diagonal(double l1, double l2,
                                   MeasureKind m = MeasureKind::HolmesThompson);
  static FinslerStructure constant_randers(double b1, double b2,
                                           MeasureKind m = MeasureKind::HolmesThompson);
  static FinslerStructure shear_randers(double kappa,
                                        MeasureKind m = MeasureKind::HolmesThompson);
  static FinslerStructure modulated(double amplitude,
                                    MeasureKind m = MeasureKind::HolmesThompson);

  MetricKind kind() const noexcept { return kind_; }
  MeasureKind measure() const noexcept { return measure_; }
  Preset preset() const noexcept { return preset_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  /// True when a and b do not depend on position.
  bool constant_coefficients() const noexcept;

  CoefficientSample sample(const Vec2& x) const;
  Mat2 alpha(const Vec2& x) const { return sample(x).alpha; }
  Vec2 beta(const Vec2& x) const { return sample(x).beta; }

  /// Riemannian companion sharing a(x) and the measure convention.
  FinslerStructure alpha_part() const;
  FinslerStructure with_measure(MeasureKind m) const;

  /// Bounds observed on a 64x64 sample: smallest eigenvalue of a, and
  /// largest |b|_{a^-1}.
  double lambda_min() const noexcept { return lambda_min_; }
  double beta_max() const noexcept { return beta_max_; }

  std::string describe() const;

 private:
  FinslerStructure(Preset p, MetricKind k, MeasureKind m, std::vector<double> params);
  void validate();

  Preset preset_;
  MetricKind kind_;
  MeasureKind measure_;
  std::vector<double> params_;
  double lambda_min_ = 0.0;
  double beta_max_ = 0.0;
};

/// The co-norm F*(x, .) with coefficients frozen at one point. This is the
/// single evaluation path for dual norms, Legendre maps and Hessians.
class DualNorm {
 public:
  DualNorm(const Mat2& alpha, const Vec2& beta, MetricKind kind);

  double operator()(const Vec2& xi) const;
  /// d/dxi of F*^2 / 2.
  Vec2 legendre(const Vec2& xi) const;
  /// d^2/dxi^2 of F*^2 / 2. For Randers kind the origin is a singular point;
  /// `regularize` substitutes a^-1 there instead of throwing.
  Mat2 hessian(const Vec2& xi, bool regularize = false) const;

  const Mat2& alpha_inverse() const noexcept { return p_; }
  const Vec2& beta() const noexcept { return b_; }
  bool riemannian() const noexcept { return riemannian_; }

 private:
  Mat2 p_;
  Vec2 b_;
  Vec2 pb_;
  double c_;  // 1 - |b|^2_{a^-1}
  bool riemannian_;
};

DualNorm dual_norm_at(const FinslerStructure& f, const Vec2& x);

double primal_norm(const FinslerStructure& f, const Vec2& x, const Vec2& v);
double dual_norm(const FinslerStructure& f, const Vec2& x, const Vec2& xi);
Vec2 legendre_map(const FinslerStructure& f, const Vec2& x, const Vec2& xi);
Mat2 hessian_tensor(const FinslerStructure& f, const Vec2& x, const Vec2& xi);

/// Same numerical object as hessian_tensor; kept separate because it is
/// evaluated at xi = dU in the elastic form.
Mat2 elasticity_tensor(const FinslerStructure& f, const Vec2& x, const Vec2& xi);

/// First-order symmetric Randers correction: the xi-Hessian of
/// <b, xi>_{a^-1} |xi|_{a^-1}, so that T_F = a^-1 - S + O(|b|^2).
Mat2 symmetric_correction(const Mat2& alpha_inverse, const Vec2& beta, const Vec2& xi);

/// The two-term symmetric tensor (b xi^T + xi b^T) / |xi| contracted through
/// a^-1. Agrees with symmetric_correction only for unit xi orthogonal to b;
/// kept to quantify that gap.
Mat2 two_term_symmetric_correction(const Mat2& alpha_inverse, const Vec2& beta, const Vec2& xi);

/// A_beta = (Db - Db^T) / 2 from the analytic Jacobian of b.
Mat2 antisymmetric_part(const FinslerStructure& f, const Vec2& x);
/// Same, from central differences of b with the given step.
Mat2 antisymmetric_part_fd(const FinslerStructure& f, const Vec2& x, double step);

struct ResponseTensors {
  Vec2 basepoint;
  Vec2 base_covector;
  Mat2 alpha_inverse;
  Mat2 response;                // exact T_F
  Mat2 symmetric_correction;    // S_beta
  Mat2 antisymmetric;           // A_beta
  Mat2 first_order_response;    // a^-1 - S_beta
  Mat2 mobility;                // T_F + A_beta
  Mat2 elasticity;              // C_F at the same covector
};

ResponseTensors randers_first_order(const FinslerStructure& f, const Vec2& x, const Vec2& xi);

/// Additive mobility law T_F + A_beta.
Mat2 mobility_additive(const FinslerStructure& f, const Vec2& x, const Vec2& xi);
/// Inverse-response mobility law T_F^-1.
Mat2 mobility_inverse(const FinslerStructure& f, const Vec2& x, const Vec2& xi);

/// Density of mu_F against coordinate Lebesgue measure, from the polygonal
/// area of the sampled indicatrix (BH) or co-indicatrix (HT).
double measure_density(const FinslerStructure& f, const Vec2& x, std::size_t samples = 16384);
double measure_density(const Mat2& alpha, const Vec2& beta, MetricKind kind, MeasureKind measure,
                       std::size_t samples);

/// Frozen-coefficient distance F(x, y - x) using the minimal periodic
/// representative. Only valid for Euclidean separations below 0.25.
double local_distance(const FinslerStructure& f, const Vec2& x, const Vec2& y);

inline constexpr double kLocalDistanceLimit = 0.25;

}  // namespace fvortex
