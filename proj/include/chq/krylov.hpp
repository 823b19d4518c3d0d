#pragma once

#include <Eigen/Core>
#include <functional>

namespace chq {

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovResult {
  int iterations = 0;
  double residual = 0;  // ||b - A x|| / ||b||
  bool converged = false;
};

// Restarted GMRES with right preconditioning; x holds the initial guess.
KrylovResult gmres(const LinearMap& A, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                   const LinearMap& M_inv, double tol, int restart, int max_iter);

}  // namespace chq
