#include "fvortex/finsler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "fvortex/errors.hpp"

namespace fvortex {

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::Identity: return "identity";
    case Preset::Diagonal: return "diagonal";
    case Preset::ConstantRanders: return "constant-randers";
    case Preset::ShearRanders: return "shear-randers";
    case Preset::Modulated: return "modulated";
  }
  return "unknown";
}

std::string_view measure_name(MeasureKind m) {
  return m == MeasureKind::BusemannHausdorff ? "busemann-hausdorff" : "holmes-thompson";
}

FinslerStructure::FinslerStructure(Preset p, MetricKind k, MeasureKind m,
                                   std::vector<double> params)
    : preset_(p), kind_(k), measure_(m), params_(std::move(params)) {
  validate();
}

FinslerStructure FinslerStructure::identity(MeasureKind m) {
  return {Preset::Identity, MetricKind::Riemannian, m, {}};
}

FinslerStructure FinslerStructure::diagonal(double l1, double l2, MeasureKind m) {
  return {Preset::Diagonal, MetricKind::Riemannian, m, {l1, l2}};
}

FinslerStructure FinslerStructure::constant_randers(double b1, double b2, MeasureKind m) {
  return {Preset::ConstantRanders, MetricKind::Randers, m, {b1, b2}};
}

FinslerStructure FinslerStructure::shear_randers(double kappa, MeasureKind m) {
  return {Preset::ShearRanders, MetricKind::Randers, m, {kappa}};
}

FinslerStructure FinslerStructure::modulated(double amplitude, MeasureKind m) {
  return {Preset::Modulated, MetricKind::Riemannian, m, {amplitude}};
}

bool FinslerStructure::constant_coefficients() const noexcept {
  return preset_ == Preset::Identity || preset_ == Preset::Diagonal ||
         preset_ == Preset::ConstantRanders;
}

CoefficientSample FinslerStructure::sample(const Vec2& x) const {
  CoefficientSample s{Mat2::Identity(), Vec2::Zero(), Mat2::Zero()};
  const double tau = 2.0 * kPi;
  switch (preset_) {
    case Preset::Identity:
      break;
    case Preset::Diagonal:
      s.alpha(0, 0) = params_[0];
      s.alpha(1, 1) = params_[1];
      break;
    case Preset::ConstantRanders:
      s.beta = {params_[0], params_[1]};
      break;
    case Preset::ShearRanders: {
      // Periodic shear: b_2 = kappa x^1 to first order around x^1 = 0.
      const double kappa = params_[0];
      s.beta = {0.0, kappa * std::sin(tau * x[0]) / tau};
      s.beta_jacobian(1, 0) = kappa * std::cos(tau * x[0]);
      break;
    }
    case Preset::Modulated: {
      const double amp = params_[0];
      s.alpha(0, 0) = 1.0 + amp * std::sin(tau * x[0]);
      s.alpha(1, 1) = 1.0 + amp * std::cos(tau * x[1]);
      s.alpha(0, 1) = s.alpha(1, 0) = 0.5 * amp * std::sin(tau * x[1]);
      break;
    }
  }
  return s;
}

FinslerStructure FinslerStructure::alpha_part() const {
  switch (preset_) {
    case Preset::ConstantRanders:
    case Preset::ShearRanders:
      return identity(measure_);
    default:
      return *this;
  }
}

FinslerStructure FinslerStructure::with_measure(MeasureKind m) const {
  FinslerStructure copy = *this;
  copy.measure_ = m;
  return copy;
}

void FinslerStructure::validate() {
  const std::size_t expected = [&] {
    switch (preset_) {
      case Preset::Identity: return 0u;
      case Preset::Diagonal: return 2u;
      case Preset::ConstantRanders: return 2u;
      case Preset::ShearRanders: return 1u;
      case Preset::Modulated: return 1u;
    }
    return 0u;
  }();
  if (params_.size() != expected) {
    throw InvalidStructure(fmt::format("preset {} expects {} parameters, got {}",
                                       preset_name(preset_), expected, params_.size()));
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw InvalidStructure("non-finite preset parameter");
  }

  lambda_min_ = std::numeric_limits<double>::infinity();
  beta_max_ = 0.0;
  constexpr int kSide = 64;
  for (int i = 0; i < kSide; ++i) {
    for (int j = 0; j < kSide; ++j) {
      const Vec2 x{(i + 0.5) / kSide, (j + 0.5) / kSide};
      const CoefficientSample s = sample(x);
      if (std::abs(s.alpha(0, 1) - s.alpha(1, 0)) > 1e-14) {
        throw InvalidStructure("alpha tensor is not symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Mat2> eig(s.alpha, Eigen::EigenvaluesOnly);
      lambda_min_ = std::min(lambda_min_, eig.eigenvalues()[0]);
      if (eig.eigenvalues()[0] <= 0.0) {
        throw InvalidStructure(fmt::format("alpha tensor not positive definite at ({}, {})",
                                           x[0], x[1]));
      }
      const double bnorm = std::sqrt(s.beta.dot(s.alpha.inverse() * s.beta));
      beta_max_ = std::max(beta_max_, bnorm);
    }
  }
  if (beta_max_ >= 1.0) {
    throw InvalidStructure(
        fmt::format("Randers one-form has |b|_(a^-1) = {} >= 1; the norm is not convex", beta_max_));
  }
}

std::string FinslerStructure::describe() const {
  std::string params;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params += fmt::format("{}{}", i ? ", " : "", params_[i]);
  }
  return fmt::format("{}({}) [{}]", preset_name(preset_), params, measure_name(measure_));
}

// ---------------------------------------------------------------------------

DualNorm::DualNorm(const Mat2& alpha, const Vec2& beta, MetricKind kind)
    : p_(alpha.inverse()), b_(beta), riemannian_(kind == MetricKind::Riemannian) {
  if (riemannian_) b_.setZero();
  pb_ = p_ * b_;
  c_ = 1.0 - b_.dot(pb_);
  if (!(c_ > 0.0)) throw InvalidStructure("Randers one-form violates |b| < 1");
}

double DualNorm::operator()(const Vec2& xi) const {
  const double n2 = xi.dot(p_ * xi);
  if (riemannian_) return std::sqrt(n2);
  const double t = pb_.dot(xi);
  const double s = std::sqrt(std::max(0.0, c_ * n2 + t * t));
  return (s - t) / c_;
}

Vec2 DualNorm::legendre(const Vec2& xi) const {
  const Vec2 pxi = p_ * xi;
  if (riemannian_) return pxi;
  const double n2 = xi.dot(pxi);
  if (n2 == 0.0) return Vec2::Zero();
  const double t = pb_.dot(xi);
  const double s = std::sqrt(c_ * n2 + t * t);
  const double fstar = (s - t) / c_;
  const Vec2 grad = ((c_ * pxi + t * pb_) / s - pb_) / c_;
  return fstar * grad;
}

Mat2 DualNorm::hessian(const Vec2& xi, bool regularize) const {
  if (riemannian_) return p_;
  const Vec2 pxi = p_ * xi;
  const double n2 = xi.dot(pxi);
  if (n2 == 0.0) {
    if (regularize) return p_;
    throw SingularPoint("Randers co-norm is not twice differentiable at the zero covector");
  }
  const double t = pb_.dot(xi);
  const double s = std::sqrt(c_ * n2 + t * t);
  const double fstar = (s - t) / c_;
  const Vec2 q = c_ * pxi + t * pb_;
  const Vec2 grad = (q / s - pb_) / c_;
  const Mat2 hess_f = ((c_ * p_ + pb_ * pb_.transpose()) / s - q * q.transpose() / (s * s * s)) / c_;
  Mat2 h = grad * grad.transpose() + fstar * hess_f;
  return 0.5 * (h + h.transpose());
}

DualNorm dual_norm_at(const FinslerStructure& f, const Vec2& x) {
  const CoefficientSample s = f.sample(x);
  return DualNorm(s.alpha, s.beta, f.kind());
}

double primal_norm(const FinslerStructure& f, const Vec2& x, const Vec2& v) {
  const CoefficientSample s = f.sample(x);
  const double q = v.dot(s.alpha * v);
  if (f.kind() == MetricKind::Riemannian) return std::sqrt(q);
  if (s.beta.dot(s.alpha.inverse() * s.beta) >= 1.0) {
    throw InvalidStructure("Randers one-form violates |b| < 1");
  }
  return std::sqrt(q) + s.beta.dot(v);
}

double dual_norm(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  return dual_norm_at(f, x)(xi);
}

Vec2 legendre_map(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  return dual_norm_at(f, x).legendre(xi);
}

Mat2 hessian_tensor(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  return dual_norm_at(f, x).hessian(xi);
}

Mat2 elasticity_tensor(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  return hessian_tensor(f, x, xi);
}

Mat2 symmetric_correction(const Mat2& p, const Vec2& beta, const Vec2& xi) {
  const Vec2 pxi = p * xi;
  const double n = std::sqrt(xi.dot(pxi));
  if (n == 0.0) throw SingularPoint("symmetric Randers correction undefined at xi = 0");
  const Vec2 pb = p * beta;
  const Vec2 pxi_hat = pxi / n;
  const double t_hat = pb.dot(xi) / n;
  return pb * pxi_hat.transpose() + pxi_hat * pb.transpose() +
         t_hat * (p - pxi_hat * pxi_hat.transpose());
}

Mat2 two_term_symmetric_correction(const Mat2& p, const Vec2& beta, const Vec2& xi) {
  const Vec2 pxi = p * xi;
  const double n = std::sqrt(xi.dot(pxi));
  if (n == 0.0) throw SingularPoint("symmetric Randers correction undefined at xi = 0");
  const Vec2 pb = p * beta;
  const Vec2 pxi_hat = pxi / n;
  return (pb * pxi_hat.transpose() + pxi_hat * pb.transpose()) / n;
}

Mat2 antisymmetric_part(const FinslerStructure& f, const Vec2& x) {
  const Mat2 j = f.sample(x).beta_jacobian;
  return 0.5 * (j - j.transpose());
}

Mat2 antisymmetric_part_fd(const FinslerStructure& f, const Vec2& x, double step) {
  Mat2 j;
  for (int col = 0; col < 2; ++col) {
    Vec2 e = Vec2::Zero();
    e[col] = step;
    j.col(col) = (f.beta(x + e) - f.beta(x - e)) / (2.0 * step);
  }
  return 0.5 * (j - j.transpose());
}

ResponseTensors randers_first_order(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  if (f.kind() != MetricKind::Randers) {
    throw NotRanders("randers_first_order requires a Randers structure");
  }
  if (xi.squaredNorm() == 0.0) throw SingularPoint("randers_first_order requires xi != 0");
  const CoefficientSample s = f.sample(x);
  const DualNorm dn(s.alpha, s.beta, f.kind());
  ResponseTensors r;
  r.basepoint = x;
  r.base_covector = xi;
  r.alpha_inverse = dn.alpha_inverse();
  r.response = dn.hessian(xi);
  r.symmetric_correction = symmetric_correction(r.alpha_inverse, s.beta, xi);
  r.antisymmetric = 0.5 * (s.beta_jacobian - s.beta_jacobian.transpose());
  r.first_order_response = r.alpha_inverse - r.symmetric_correction;
  r.mobility = r.response + r.antisymmetric;
  r.elasticity = r.response;
  return r;
}

Mat2 mobility_additive(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  const DualNorm dn = dual_norm_at(f, x);
  return dn.hessian(xi, /*regularize=*/true) + antisymmetric_part(f, x);
}

Mat2 mobility_inverse(const FinslerStructure& f, const Vec2& x, const Vec2& xi) {
  const DualNorm dn = dual_norm_at(f, x);
  return dn.hessian(xi, /*regularize=*/true).inverse();
}

double measure_density(const Mat2& alpha, const Vec2& beta, MetricKind kind, MeasureKind measure,
                       std::size_t samples) {
  // Polygon through boundary points r(theta) u(theta) of a star-shaped body.
  const DualNorm dn(alpha, beta, kind);
  const bool primal = measure == MeasureKind::BusemannHausdorff;
  const Vec2 b = kind == MetricKind::Riemannian ? Vec2::Zero() : beta;
  auto gauge = [&](const Vec2& u) {
    return primal ? std::sqrt(u.dot(alpha * u)) + b.dot(u) : dn(u);
  };
  // Richardson on N and N/2 vertices: the polygon defect is c / N^2 + O(N^-4).
  const std::size_t n = samples + (samples % 2);
  const double dtheta = 2.0 * kPi / static_cast<double>(n);
  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double th = dtheta * static_cast<double>(k);
    r[k] = 1.0 / gauge(Vec2{std::cos(th), std::sin(th)});
  }
  double fine = 0.0, coarse = 0.0;
  for (std::size_t k = 0; k < n; ++k) fine += r[k] * r[(k + 1) % n];
  for (std::size_t k = 0; k < n; k += 2) coarse += r[k] * r[(k + 2) % n];
  fine *= 0.5 * std::sin(dtheta);
  coarse *= 0.5 * std::sin(2.0 * dtheta);
  const double area = (4.0 * fine - coarse) / 3.0;
  return primal ? kPi / area : area / kPi;
}

double measure_density(const FinslerStructure& f, const Vec2& x, std::size_t samples) {
  const CoefficientSample s = f.sample(x);
  return measure_density(s.alpha, s.beta, f.kind(), f.measure(), samples);
}

double local_distance(const FinslerStructure& f, const Vec2& x, const Vec2& y) {
  const Vec2 d = min_image(y - x);
  if (d.norm() >= kLocalDistanceLimit) {
    throw DistanceOutOfRange(
        fmt::format("local_distance only covers separations below {} (got {})",
                    kLocalDistanceLimit, d.norm()));
  }
  return primal_norm(f, x, d);
}

}  // namespace fvortex
