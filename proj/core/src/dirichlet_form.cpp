#include "fvortex/dirichlet_form.hpp"

#include <cmath>

namespace fvortex {
namespace {

struct Tap {
  int di, dj;
  double c1, c2;  // contribution to (xi_1, xi_2), times h
};

// Unused trailing taps have zero coefficients and point at the node itself.
constexpr std::array<std::array<Tap, 6>, 3> kStencils{{
    {{{1, 0, 1.0, 0.0},
      {0, 0, -1.0, 0.0},
      {0, 1, 0.0, 0.25},
      {0, -1, 0.0, -0.25},
      {1, 1, 0.0, 0.25},
      {1, -1, 0.0, -0.25}}},
    {{{0, 1, 0.0, 1.0},
      {0, 0, 0.0, -1.0},
      {1, 0, 0.25, 0.0},
      {-1, 0, -0.25, 0.0},
      {1, 1, 0.25, 0.0},
      {-1, 1, -0.25, 0.0}}},
    {{{0, 0, -0.5, -0.5},
      {1, 0, 0.5, -0.5},
      {0, 1, -0.5, 0.5},
      {1, 1, 0.5, 0.5},
      {0, 0, 0.0, 0.0},
      {0, 0, 0.0, 0.0}}},
}};

}  // namespace

DirichletForm::DirichletForm(std::shared_ptr<const TorusGrid> grid) : grid_(std::move(grid)) {
  const TorusGrid& g = *grid_;
  const int n = g.n();
  const double h2 = g.h() * g.h();
  quad_.reserve(3 * g.size());
  nbr_.reserve(3 * g.size());
  for (int f = 0; f < 3; ++f) {
    const auto fam = static_cast<QuadFamily>(f);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t k = g.index(i, j);
        const CoefficientSample s = g.structure().sample(g.quad_point(fam, i, j));
        quad_.push_back({DualNorm(s.alpha, s.beta, g.structure().kind()),
                         g.quad_density(fam)[k] * h2 / 3.0});
        std::array<std::uint32_t, 6> idx{};
        for (int e = 0; e < 6; ++e) {
          const Tap& t = kStencils[f][e];
          idx[e] = static_cast<std::uint32_t>(g.index(i + t.di, j + t.dj));
        }
        nbr_.push_back(idx);
      }
    }
  }
}

Vec2 DirichletForm::gather(std::size_t q, const Eigen::VectorXd& v) const {
  const auto& taps = kStencils[q / grid_->size()];
  const auto& idx = nbr_[q];
  Vec2 xi = Vec2::Zero();
  for (int e = 0; e < 6; ++e) {
    const double u = v[idx[e]];
    xi[0] += taps[e].c1 * u;
    xi[1] += taps[e].c2 * u;
  }
  return xi / grid_->h();
}

void DirichletForm::scatter(std::size_t q, const Vec2& flux, Eigen::VectorXd& out) const {
  const auto& taps = kStencils[q / grid_->size()];
  const auto& idx = nbr_[q];
  const double inv_h = 1.0 / grid_->h();
  for (int e = 0; e < 6; ++e) {
    out[idx[e]] += (taps[e].c1 * flux[0] + taps[e].c2 * flux[1]) * inv_h;
  }
}

double DirichletForm::energy(const ScalarField& u) const {
  double e = 0.0;
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const double f = quad_[q].norm(gather(q, u));
    e += 0.5 * quad_[q].weight * f * f;
  }
  return e;
}

Eigen::VectorXd DirichletForm::energy_gradient(const ScalarField& u) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid_->size());
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    scatter(q, quad_[q].weight * quad_[q].norm.legendre(gather(q, u)), out);
  }
  return out;
}

std::vector<Vec2> DirichletForm::covectors(const ScalarField& u) const {
  std::vector<Vec2> xi(quad_.size());
  for (std::size_t q = 0; q < quad_.size(); ++q) xi[q] = gather(q, u);
  return xi;
}

double DirichletForm::integrate(
    const ScalarField& u, const std::function<double(const DualNorm&, const Vec2&)>& f) const {
  double sum = 0.0;
  for (std::size_t q = 0; q < quad_.size(); ++q) sum += quad_[q].weight * f(quad_[q].norm, gather(q, u));
  return sum;
}

TangentOperator DirichletForm::tangent(const ScalarField& u) const {
  if (linear()) return alpha_tangent();
  std::vector<Mat2> t(quad_.size());
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const Vec2 xi = gather(q, u);
    const DualNorm& dn = quad_[q].norm;
    t[q] = quad_[q].weight *
           (xi.norm() < kHessianRegularization ? dn.alpha_inverse() : dn.hessian(xi));
  }
  return TangentOperator(this, std::move(t));
}

TangentOperator DirichletForm::alpha_tangent() const {
  std::vector<Mat2> t(quad_.size());
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    t[q] = quad_[q].weight * quad_[q].norm.alpha_inverse();
  }
  return TangentOperator(this, std::move(t));
}

Mat2 DirichletForm::mean_alpha_inverse() const {
  Mat2 m = Mat2::Zero();
  for (const Quad& q : quad_) m += q.norm.alpha_inverse();
  return m / static_cast<double>(quad_.size());
}

double DirichletForm::mean_density() const {
  const double h2 = grid_->h() * grid_->h();
  double s = 0.0;
  for (const Quad& q : quad_) s += q.weight * 3.0 / h2;
  return s / static_cast<double>(quad_.size());
}

Eigen::VectorXd DirichletForm::constant_impulse(const Mat2& p, double sigma) const {
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(grid_->size());
  e0[0] = 1.0;
  const double w = sigma * grid_->h() * grid_->h() / 3.0;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid_->size());
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const Vec2 xi = gather(q, e0);
    if (xi[0] != 0.0 || xi[1] != 0.0) scatter(q, w * (p * xi), out);
  }
  return out;
}

Eigen::VectorXd TangentOperator::apply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (std::size_t q = 0; q < t_.size(); ++q) {
    form_->scatter(q, t_[q] * form_->gather(q, v), out);
  }
  return out;
}

Eigen::SparseMatrix<double> TangentOperator::to_sparse() const {
  const std::size_t n = size();
  const double inv_h = 1.0 / form_->grid().h();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(t_.size() * 36);
  for (std::size_t q = 0; q < t_.size(); ++q) {
    const auto& taps = kStencils[q / n];
    const auto& idx = form_->nbr_[q];
    for (int a = 0; a < 6; ++a) {
      const Vec2 ga(taps[a].c1 * inv_h, taps[a].c2 * inv_h);
      if (ga.isZero()) continue;
      for (int b = 0; b < 6; ++b) {
        const Vec2 gb(taps[b].c1 * inv_h, taps[b].c2 * inv_h);
        if (gb.isZero()) continue;
        trip.emplace_back(idx[a], idx[b], ga.dot(t_[q] * gb));
      }
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Mat2 TangentOperator::mean_tensor() const {
  Mat2 m = Mat2::Zero();
  for (const Mat2& t : t_) m += t;
  return m / static_cast<double>(t_.size());
}

ScalarField assemble_weak_laplacian(const DirichletForm& form, const ScalarField& u) {
  return form.energy_gradient(u).cwiseQuotient(form.grid().weights());
}

TangentOperator tangent_operator(const DirichletForm& form, const ScalarField& u) {
  return form.tangent(u);
}

double dirichlet_energy(const DirichletForm& form, const ScalarField& u) {
  return form.energy(u);
}

}  // namespace fvortex
