#include "chq/krylov.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace chq {

KrylovResult gmres(const LinearMap& A, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                   const LinearMap& M_inv, double tol, int restart, int max_iter) {
  KrylovResult out;
  const double bnorm = b.norm();
  if (bnorm == 0) {
    x.setZero(b.size());
    out.converged = true;
    return out;
  }
  if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());
  auto precond = [&](const Eigen::VectorXd& v) { return M_inv ? M_inv(v) : v; };

  while (out.iterations < max_iter) {
    Eigen::VectorXd r = b - A(x);
    double beta = r.norm();
    out.residual = beta / bnorm;
    if (out.residual < tol) {
      out.converged = true;
      return out;
    }
    const int m = restart;
    Eigen::MatrixXd V(b.size(), m + 1), Z(b.size(), m);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g = Eigen::VectorXd::Zero(m + 1);
    V.col(0) = r / beta;
    g[0] = beta;
    int j = 0;
    for (; j < m && out.iterations < max_iter; ++j, ++out.iterations) {
      Z.col(j) = precond(V.col(j));
      Eigen::VectorXd w = A(Z.col(j));
      // modified Gram-Schmidt, twice for stability
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const double hij = V.col(i).dot(w);
          H(i, j) += hij;
          w -= hij * V.col(i);
        }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) > 0) V.col(j + 1) = w / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double tmp = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = tmp;
      }
      const double den = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = den > 0 ? H(j, j) / den : 1;
      sn[j] = den > 0 ? H(j + 1, j) / den : 0;
      H(j, j) = den;
      H(j + 1, j) = 0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      out.residual = std::abs(g[j + 1]) / bnorm;
      if (out.residual < tol || H(j, j) == 0) {
        ++j;
        ++out.iterations;
        break;
      }
    }
    Eigen::VectorXd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x += Z.leftCols(j) * y;
    if (out.residual < tol) {
      out.residual = (b - A(x)).norm() / bnorm;
      out.converged = out.residual < 10 * tol;
      if (out.converged) return out;
    }
  }
  return out;
}

}  // namespace chq
