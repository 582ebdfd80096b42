#include "ieq/verify.hpp"

#include <cmath>
#include <vector>

#include "dense_detail.hpp"
#include "ieq/errors.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"

namespace ieq {

namespace {

double pipeline_loss(const Params& p, const Dataset& data,
                     const SolveOptions& opts) {
  const Matrix Phi = feature_map(data.X, p.W);
  const EquilibriumState state = solve_forward(p, Phi, opts);
  if (!state.converged) {
    throw NotConvergedError("finite_diff_gradients: forward solve hit max_iter");
  }
  return loss(predict(state.Z, p.b), data.y);
}

}  // namespace

Gradients finite_diff_gradients(const Params& p, const Dataset& data,
                                const FdOptions& fd, const SolveOptions& opts) {
  validate(p, data);
  if (!(fd.step > 0.0) || fd.kink_margin < 0.0) {
    throw ShapeError("finite_diff_gradients: bad FdOptions");
  }

  const Matrix preW = data.X * p.W;
  const Matrix Phi = preW.cwiseMax(0.0);
  const EquilibriumState base = solve_forward(p, Phi, opts);
  if (!base.converged) {
    throw NotConvergedError("finite_diff_gradients: forward solve hit max_iter");
  }
  const Matrix preZ = p.gamma * (base.Z * p.A) + Phi;
  if (preW.cwiseAbs().minCoeff() <= fd.kink_margin ||
      preZ.cwiseAbs().minCoeff() <= fd.kink_margin) {
    throw KinkProximityError(
        "finite_diff_gradients: pre-activation within kink margin; resample");
  }

  const double h = fd.step;
  Gradients g;
  g.dW.resize(p.W.rows(), p.W.cols());
  g.dA.resize(p.A.rows(), p.A.cols());
  g.db.resize(p.b.size());

  Params q = p;
  for (Eigen::Index i = 0; i < p.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.W.cols(); ++j) {
      q.W(i, j) = p.W(i, j) + h;
      const double lp = pipeline_loss(q, data, opts);
      q.W(i, j) = p.W(i, j) - h;
      const double lm = pipeline_loss(q, data, opts);
      q.W(i, j) = p.W(i, j);
      g.dW(i, j) = (lp - lm) / (2.0 * h);
    }
  }
  for (Eigen::Index i = 0; i < p.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.A.cols(); ++j) {
      q.A(i, j) = p.A(i, j) + h;
      const double lp = pipeline_loss(q, data, opts);
      q.A(i, j) = p.A(i, j) - h;
      const double lm = pipeline_loss(q, data, opts);
      q.A(i, j) = p.A(i, j);
      g.dA(i, j) = (lp - lm) / (2.0 * h);
    }
  }
  for (Eigen::Index i = 0; i < p.b.size(); ++i) {
    q.b(i) = p.b(i) + h;
    const double lp = pipeline_loss(q, data, opts);
    q.b(i) = p.b(i) - h;
    const double lm = pipeline_loss(q, data, opts);
    q.b(i) = p.b(i);
    g.db(i) = (lp - lm) / (2.0 * h);
  }
  return g;
}

Gradients dense_gradients(const Params& p, const Dataset& data,
                          const SolveOptions& opts) {
  validate(p, data);
  const Eigen::Index N = data.X.rows();
  const Eigen::Index d = data.X.cols();
  const Eigen::Index m = p.width();
  if (N * m > 4096) {
    throw TooLargeError("dense_gradients: N*m exceeds the dense gate (4096)");
  }

  const Matrix Phi = feature_map(data.X, p.W);
  const EquilibriumState state = solve_forward(p, Phi, opts);
  const Vector r = predict(state.Z, p.b) - data.y;

  const Vector d_vec = detail::vec(state.D_mask);
  const Vector e_vec = detail::vec(state.E_mask);
  const Matrix Q = detail::assemble_q(d_vec, p.A, p.gamma, N);
  const Vector u = Eigen::PartialPivLU<Matrix>(Q.transpose())
                       .solve(detail::vec(r * p.b.transpose()));

  Matrix ImX = detail::kron(Matrix::Identity(m, m), data.X);
  for (Eigen::Index i = 0; i < N * m; ++i) ImX.row(i) *= d_vec(i) * e_vec(i);
  Matrix ImZ = detail::kron(Matrix::Identity(m, m), state.Z);
  for (Eigen::Index i = 0; i < N * m; ++i) ImZ.row(i) *= d_vec(i);

  Gradients g;
  g.dW = detail::unvec(ImX.transpose() * u, d, m);
  g.dA = p.gamma * detail::unvec(ImZ.transpose() * u, m, m);
  g.db = state.Z.transpose() * r;
  return g;
}

Gradients unrolled_gradients(const Params& p, const Dataset& data,
                             int unroll_steps) {
  validate(p, data);
  if (unroll_steps < 1) {
    throw ShapeError("unrolled_gradients: unroll_steps must be positive");
  }
  const Eigen::Index N = data.X.rows();
  const Eigen::Index m = p.width();
  const Matrix Phi = feature_map(data.X, p.W);
  const Mask E = (Phi.array() > 0.0).cast<double>();

  std::vector<Matrix> Z(unroll_steps + 1);
  std::vector<Mask> M(unroll_steps + 1);
  Z[0] = Matrix::Zero(N, m);
  for (int l = 1; l <= unroll_steps; ++l) {
    const Matrix pre = p.gamma * (Z[l - 1] * p.A) + Phi;
    M[l] = (pre.array() > 0.0).cast<double>();
    Z[l] = pre.cwiseMax(0.0);
  }

  const Vector r = Z[unroll_steps] * p.b - data.y;

  // Reverse accumulation through the truncated composition.
  Matrix G = r * p.b.transpose();
  Matrix dA = Matrix::Zero(m, m);
  Matrix dPhi = Matrix::Zero(N, m);
  for (int l = unroll_steps; l >= 1; --l) {
    const Matrix U = M[l].cwiseProduct(G);
    dA.noalias() += p.gamma * (Z[l - 1].transpose() * U);
    dPhi += U;
    G.noalias() = p.gamma * (U * p.A.transpose());
  }

  Gradients g;
  g.dA = dA;
  g.dW = data.X.transpose() * E.cwiseProduct(dPhi);
  g.db = Z[unroll_steps].transpose() * r;
  return g;
}

}  // namespace ieq
