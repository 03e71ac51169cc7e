#pragma once

#include <functional>

#include <Eigen/Core>

namespace fvortex::oracle {

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

/// Central differences, O(step^2).
Eigen::VectorXd fd_gradient(const ScalarFunction& f, const Eigen::VectorXd& x, double step);
Eigen::MatrixXd fd_hessian(const ScalarFunction& f, const Eigen::VectorXd& x, double step);

/// Jacobian of a vector map by central differences.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step);

/// Dual norm max{<xi, v> : sqrt(v^T a v) + <b, v> = 1} by sampling the
/// indicatrix on `samples` directions and refining the best one by golden
/// section search.
double dual_norm_by_maximization(const Eigen::Matrix2d& alpha, const Eigen::Vector2d& beta,
                                 const Eigen::Vector2d& xi, int samples = 4096);

}  // namespace fvortex::oracle
