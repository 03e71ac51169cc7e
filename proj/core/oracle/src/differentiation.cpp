#include "fvortex/oracle/differentiation.hpp"

#include <cmath>
#include <numbers>

namespace fvortex::oracle {

Eigen::VectorXd fd_gradient(const ScalarFunction& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const ScalarFunction& f, const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    h(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (step * step);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      h(i, j) = h(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
    }
  }
  return h;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
  Eigen::MatrixXd jac;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const Eigen::VectorXd col = (f(xp) - f(xm)) / (2.0 * step);
    if (i == 0) jac.resize(col.size(), x.size());
    jac.col(i) = col;
  }
  return jac;
}

double dual_norm_by_maximization(const Eigen::Matrix2d& alpha, const Eigen::Vector2d& beta,
                                 const Eigen::Vector2d& xi, int samples) {
  // <xi, u / F(u)> over unit directions u.
  auto objective = [&](double th) {
    const Eigen::Vector2d u(std::cos(th), std::sin(th));
    return xi.dot(u) / (std::sqrt(u.dot(alpha * u)) + beta.dot(u));
  };
  const double dth = 2.0 * std::numbers::pi / samples;
  int best = 0;
  double best_val = objective(0.0);
  for (int k = 1; k < samples; ++k) {
    const double v = objective(k * dth);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = (best - 1) * dth, hi = (best + 1) * dth;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (fc > fd) {
      hi = d; d = c; fd = fc;
      c = hi - g * (hi - lo); fc = objective(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + g * (hi - lo); fd = objective(d);
    }
  }
  return std::max({best_val, fc, fd});
}

}  // namespace fvortex::oracle
