#pragma once

// Internal dense Kronecker assembly shared by the Gram diagnostic and the
// dense gradient oracle. Column-major vec throughout, matching Eigen storage.

#include "ieq/types.hpp"

namespace ieq::detail {

inline Vector vec(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& P, const Matrix& Q) {
  Matrix K(P.rows() * Q.rows(), P.cols() * Q.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      K.block(i * Q.rows(), j * Q.cols(), Q.rows(), Q.cols()) = P(i, j) * Q;
    }
  }
  return K;
}

// Q = I_{Nm} - gamma D (A' ⊗ I_N) with D = diag(d_vec).
inline Matrix assemble_q(const Vector& d_vec, const Matrix& A, double gamma,
                         Eigen::Index N) {
  const Eigen::Index m = A.rows();
  Matrix Q = Matrix::Identity(N * m, N * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double a = A(j, i);  // (A' ⊗ I_N) block (i, j) is A(j, i) I_N
      if (a == 0.0) continue;
      for (Eigen::Index n = 0; n < N; ++n) {
        Q(i * N + n, j * N + n) -= gamma * d_vec(i * N + n) * a;
      }
    }
  }
  return Q;
}

}  // namespace ieq::detail
