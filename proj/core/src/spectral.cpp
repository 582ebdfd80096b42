#include "ieq/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dense_detail.hpp"
#include "ieq/errors.hpp"

namespace ieq {

double operator_norm_exact(const Matrix& M) {
  if (M.size() == 0) throw ShapeError("operator_norm: empty matrix");
  if (std::max(M.rows(), M.cols()) <= 32) {
    return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
  }
  return Eigen::BDCSVD<Matrix>(M).singularValues()(0);
}

double operator_norm(const Matrix& M, double tol, std::uint64_t seed) {
  if (M.size() == 0) throw ShapeError("operator_norm: empty matrix");
  const double fro = M.norm();
  if (fro == 0.0) return 0.0;

  // Iterate v <- (B'B) v on the thin side so the work vector stays short.
  const bool tall = M.rows() >= M.cols();
  const Eigen::Index n = tall ? M.cols() : M.rows();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(gen);
  v.normalize();

  const int cap = 10 * static_cast<int>(std::max(M.rows(), M.cols()));
  Vector u, w;
  for (int iter = 0; iter < cap; ++iter) {
    if (tall) {
      u.noalias() = M * v;
      w.noalias() = M.transpose() * u;
    } else {
      u.noalias() = M.transpose() * v;
      w.noalias() = M * u;
    }
    const double lam = v.dot(w);
    if ((w - lam * v).norm() <= tol * std::max(lam, 1e-300)) {
      return std::sqrt(std::max(lam, 0.0));
    }
    const double wn = w.norm();
    if (wn <= 1e-300 * fro) break;  // v fell into the null space
    v = w / wn;
  }
  return operator_norm_exact(M);
}

double smallest_singular_value(const Matrix& M) {
  if (M.size() == 0) throw ShapeError("smallest_singular_value: empty matrix");
  if (M.rows() > M.cols()) {
    throw ShapeError("smallest_singular_value: requires rows <= cols");
  }
  if (std::max(M.rows(), M.cols()) <= 32) {
    const auto sv = Eigen::JacobiSVD<Matrix>(M).singularValues();
    return sv(sv.size() - 1);
  }
  const auto sv = Eigen::BDCSVD<Matrix>(M).singularValues();
  return sv(sv.size() - 1);
}

GramDiagnostics gram_matrix(const EquilibriumState& state, const Params& p,
                            const Matrix& X) {
  validate(p);
  const Eigen::Index N = state.Z.rows();
  const Eigen::Index m = state.Z.cols();
  if (X.rows() != N || X.cols() != p.input_dim() || m != p.width()) {
    throw ShapeError("gram_matrix: dimension mismatch");
  }
  if (N * m > 4096) {
    throw TooLargeError("gram_matrix: N*m exceeds the dense assembly gate (4096)");
  }

  const Vector d_vec = detail::vec(state.D_mask);
  const Vector e_vec = detail::vec(state.E_mask);
  const Matrix Q = detail::assemble_q(d_vec, p.A, p.gamma, N);

  // G = (b' ⊗ I_N) Q^{-1}, recovered row-block-wise from Q' G' = (b ⊗ I_N).
  Matrix rhs = Matrix::Zero(N * m, N);
  for (Eigen::Index j = 0; j < m; ++j) {
    rhs.block(j * N, 0, N, N) = p.b(j) * Matrix::Identity(N, N);
  }
  Eigen::PartialPivLU<Matrix> lu(Q.transpose());
  const Matrix G = lu.solve(rhs).transpose();  // N x Nm

  // M  = gamma G D (I_m ⊗ Z): column block j is gamma (G D)_j Z.
  // Pi = G D E (I_m ⊗ X):     column block j is (G D E)_j X.
  Matrix MMt = Matrix::Zero(N, N);
  Matrix PiPit = Matrix::Zero(N, N);
  for (Eigen::Index j = 0; j < m; ++j) {
    Matrix B = G.block(0, j * N, N, N);
    for (Eigen::Index c = 0; c < N; ++c) B.col(c) *= d_vec(j * N + c);
    const Matrix MJ = p.gamma * (B * state.Z);
    MMt.noalias() += MJ * MJ.transpose();
    for (Eigen::Index c = 0; c < N; ++c) B.col(c) *= e_vec(j * N + c);
    const Matrix PJ = B * X;
    PiPit.noalias() += PJ * PJ.transpose();
  }
  const Matrix ZZt = state.Z * state.Z.transpose();

  GramDiagnostics diag;
  diag.H = ZZt + MMt + PiPit;
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  diag.lambda_min_H = es.compute(diag.H, Eigen::EigenvaluesOnly).eigenvalues()(0);
  diag.lambda_min_ZZt = es.compute(ZZt, Eigen::EigenvaluesOnly).eigenvalues()(0);
  diag.lambda_min_MMt = es.compute(MMt, Eigen::EigenvaluesOnly).eigenvalues()(0);
  diag.lambda_min_PiPit =
      es.compute(PiPit, Eigen::EigenvaluesOnly).eigenvalues()(0);
  diag.sigma_min_Z = std::sqrt(std::max(diag.lambda_min_ZZt, 0.0));
  return diag;
}

}  // namespace ieq
