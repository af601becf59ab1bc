#pragma once

#include <Eigen/Dense>

#include <sstream>

#include "paramp/errors.hpp"

namespace paramp {

/// True when every eigenvalue of the (small, dense) matrix `m` has a strictly
/// negative real part.
template <typename Derived>
[[nodiscard]] bool is_hurwitz(const Eigen::MatrixBase<Derived>& m) {
  Eigen::EigenSolver<typename Derived::PlainObject> solver(m.derived(), false);
  return solver.eigenvalues().real().maxCoeff() < 0.0;
}

/// Solves the continuous-time Lyapunov equation  M X + X M^T + Q = 0  for the
/// stationary covariance X of dx = M x dt + noise with intensity Q.
///
/// Intended for the small drift matrices of this project (n <= 6), so the
/// dense Kronecker form (I (x) M + M (x) I) vec(X) = -vec(Q) with a pivoted LU
/// solve is both exact enough and simplest.  Throws NumericError when M is
/// not Hurwitz (no stationary solution exists).
template <typename DerivedM, typename DerivedQ>
[[nodiscard]] typename DerivedQ::PlainObject solve_continuous_lyapunov(
    const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedM::Scalar;
  using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index n = m.rows();
  if (m.cols() != n || q.rows() != n || q.cols() != n) {
    throw NumericError("solve_continuous_lyapunov(): M and Q must be square and same size.");
  }
  if (!is_hurwitz(m)) {
    throw NumericError("solve_continuous_lyapunov(): drift matrix is not Hurwitz.");
  }

  // vec(M X) = (I (x) M) vec(X);  vec(X M^T) = (M (x) I) vec(X).
  MatrixX kron = MatrixX::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    kron.block(a * n, a * n, n, n) += m.derived();
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index b = 0; b < n; ++b) {
        kron(c * n + b, a * n + b) += m(c, a);
      }
    }
  }

  VectorX rhs(n * n);
  for (Eigen::Index c = 0; c < n; ++c) {
    rhs.segment(c * n, n) = -q.derived().col(c);
  }

  const VectorX x = kron.partialPivLu().solve(rhs);
  typename DerivedQ::PlainObject result(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    result.col(c) = x.segment(c * n, n);
  }
  // Symmetrize: Q is symmetric in every use here, so X is too up to roundoff.
  result = ((result + result.transpose()) / Scalar(2)).eval();

  const double residual = (m.derived() * result + result * m.derived().transpose() + q.derived())
                              .cwiseAbs()
                              .maxCoeff();
  const double scale = q.derived().cwiseAbs().maxCoeff();
  if (!(residual <= 1e-9 * (scale > 0 ? scale : 1.0))) {
    std::ostringstream msg;
    msg << "solve_continuous_lyapunov(): residual " << residual << " exceeds tolerance.";
    throw NumericError(msg.str());
  }
  return result;
}

}  // namespace paramp
