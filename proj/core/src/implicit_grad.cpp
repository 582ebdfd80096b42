#include "ieq/implicit_grad.hpp"

#include <sstream>

#include "ieq/errors.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"

namespace ieq {

AdjointState solve_adjoint(const EquilibriumState& state, const Params& p,
                           const Vector& r, const SolveOptions& opts) {
  validate(p);
  const Eigen::Index N = state.Z.rows();
  const Eigen::Index m = state.Z.cols();
  if (r.size() != N || state.D_mask.rows() != N || state.D_mask.cols() != m) {
    throw ShapeError("solve_adjoint: dimension mismatch");
  }
  if (opts.max_iter < 1) {
    throw ShapeError("solve_adjoint: max_iter must be positive");
  }
  if (opts.strict) {
    const double ga = p.gamma * operator_norm(p.A);
    if (ga >= 1.0) {
      std::ostringstream msg;
      msg << "solve_adjoint: gamma * ||A|| = " << ga << " >= 1";
      throw NonContractiveError(msg.str());
    }
  }

  const Matrix rbT = r * p.b.transpose();
  AdjointState adj;
  adj.V = Matrix::Zero(N, m);
  Matrix next(N, m);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    next.noalias() = (state.D_mask.cwiseProduct(adj.V)) * p.A.transpose();
    next = rbT + p.gamma * next;
    adj.residual = (next - adj.V).norm();
    adj.residual_trace.push_back(adj.residual);
    adj.V.swap(next);
    adj.iterations = iter;
    if (adj.residual <= opts.tol) {
      adj.converged = true;
      break;
    }
  }
  return adj;
}

Gradients gradients(const EquilibriumState& state, const AdjointState& adj,
                    const Params& p, const Matrix& X, const Vector& r,
                    bool allow_unconverged) {
  validate(p);
  const Eigen::Index N = state.Z.rows();
  if (X.rows() != N || X.cols() != p.input_dim() ||
      state.Z.cols() != p.width() || adj.V.rows() != N ||
      adj.V.cols() != p.width() || r.size() != N) {
    throw ShapeError("gradients: dimension mismatch");
  }
  if (!adj.converged && !allow_unconverged) {
    throw UnconvergedAdjointError("gradients: adjoint solve did not converge");
  }

  const Matrix DV = state.D_mask.cwiseProduct(adj.V);
  Gradients g;
  g.db = state.Z.transpose() * r;
  g.dA = p.gamma * (state.Z.transpose() * DV);
  g.dW = X.transpose() * state.E_mask.cwiseProduct(DV);
  return g;
}

LossAndGradients loss_and_gradients(const Params& p, const Dataset& data,
                                    const SolveOptions& forward_opts,
                                    const SolveOptions& adjoint_opts,
                                    bool allow_unconverged) {
  validate(p, data);
  LossAndGradients out;
  const Matrix Phi = feature_map(data.X, p.W);
  out.state = solve_forward(p, Phi, forward_opts);
  if (!out.state.converged && !allow_unconverged) {
    throw NotConvergedError("loss_and_gradients: forward solve hit max_iter");
  }
  const Vector yhat = predict(out.state.Z, p.b);
  const Vector r = yhat - data.y;
  out.loss = 0.5 * r.squaredNorm();
  out.adjoint = solve_adjoint(out.state, p, r, adjoint_opts);
  out.grads = gradients(out.state, out.adjoint, p, data.X, r, allow_unconverged);
  return out;
}

}  // namespace ieq
