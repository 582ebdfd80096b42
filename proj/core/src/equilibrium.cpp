#include "ieq/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ieq/errors.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"

namespace ieq {

SolveOptions strict_defaults(const Matrix& Phi) {
  SolveOptions opts;
  opts.tol = 1e-10 * std::max(1.0, Phi.norm());
  opts.max_iter = 10000;
  return opts;
}

SolveOptions experiment_defaults() {
  SolveOptions opts;
  opts.tol = 1e-2;
  opts.max_iter = 100;
  return opts;
}

EquilibriumState solve_forward(const Params& p, const Matrix& Phi,
                               const SolveOptions& opts, const Matrix* z0) {
  validate(p);
  if (Phi.cols() != p.width()) {
    throw ShapeError("solve_forward: Phi columns must match width");
  }
  if (opts.max_iter < 1) {
    throw ShapeError("solve_forward: max_iter must be positive");
  }
  if (opts.strict) {
    const double ga = p.gamma * operator_norm(p.A);
    if (ga >= 1.0) {
      std::ostringstream msg;
      msg << "solve_forward: gamma * ||A|| = " << ga << " >= 1";
      throw NonContractiveError(msg.str());
    }
  }

  EquilibriumState state;
  state.Z = (z0 != nullptr) ? *z0 : Matrix::Zero(Phi.rows(), Phi.cols());
  Matrix next(Phi.rows(), Phi.cols());
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    next.noalias() = p.gamma * (state.Z * p.A);
    next += Phi;
    next = next.cwiseMax(0.0);
    state.residual = (next - state.Z).norm();
    state.residual_trace.push_back(state.residual);
    state.Z.swap(next);
    state.iterations = iter;
    if (state.residual <= opts.tol) {
      state.converged = true;
      break;
    }
  }
  Matrix pre = p.gamma * (state.Z * p.A) + Phi;
  state.D_mask = (pre.array() > 0.0).cast<double>();
  state.E_mask = (Phi.array() > 0.0).cast<double>();
  return state;
}

Matrix closed_form_equilibrium(const Matrix& Phi, const Matrix& A, double gamma) {
  if (A.rows() != A.cols() || Phi.cols() != A.rows()) {
    throw ShapeError("closed_form_equilibrium: dimension mismatch");
  }
  if ((A.array() < 0.0).any()) {
    throw NegativeEntriesError(
        "closed_form_equilibrium: A must be entrywise nonnegative");
  }
  const Matrix S = Matrix::Identity(A.rows(), A.cols()) - gamma * A;
  Eigen::FullPivLU<Matrix> lu(S.transpose());
  if (!lu.isInvertible()) {
    throw SingularError("closed_form_equilibrium: I - gamma A is singular");
  }
  // Z = Phi (I - gamma A)^{-1}, solved as S' Z' = Phi'; the true solution is
  // entrywise nonnegative, so negative roundoff is clamped away.
  Matrix Z = lu.solve(Phi.transpose()).transpose();
  return Z.cwiseMax(0.0);
}

ContractionDiagnostics contraction_diagnostics(
    const std::vector<double>& residual_trace, const Params& p) {
  ContractionDiagnostics diag;
  diag.gamma_a_norm = p.gamma * operator_norm(p.A);
  for (std::size_t i = 1; i < residual_trace.size(); ++i) {
    const double prev = residual_trace[i - 1];
    const double ratio = prev > 1e-300 ? residual_trace[i] / prev : 0.0;
    diag.ratios.push_back(ratio);
    diag.max_ratio = std::max(diag.max_ratio, ratio);
  }
  return diag;
}

EquilibriumGap equilibrium_gap(const Matrix& Wa, const Matrix& Aa,
                               const Matrix& Wb, const Matrix& Ab,
                               const Matrix& X, double gamma,
                               const SolveOptions& opts) {
  if (Wa.rows() != Wb.rows() || Wa.cols() != Wb.cols() ||
      Aa.rows() != Ab.rows() || Aa.cols() != Ab.cols() ||
      Wa.cols() != Aa.rows() || X.cols() != Wa.rows()) {
    throw ShapeError("equilibrium_gap: dimension mismatch");
  }
  const double l1 = std::max(operator_norm_exact(Wa), operator_norm_exact(Wb));
  const double l2 = std::max(operator_norm_exact(Aa), operator_norm_exact(Ab));
  const double g0 = gamma * l2;
  if (g0 >= 1.0) {
    throw NonContractiveError("equilibrium_gap: gamma * max(||A||) >= 1");
  }

  const Eigen::Index m = Aa.rows();
  Params pa{Wa, Aa, Vector::Zero(m), gamma};
  Params pb{Wb, Ab, Vector::Zero(m), gamma};
  const Matrix Za = solve_forward(pa, feature_map(X, Wa), opts).Z;
  const Matrix Zb = solve_forward(pb, feature_map(X, Wb), opts).Z;

  EquilibriumGap gap;
  gap.actual = (Za - Zb).norm();
  const double dA = operator_norm_exact(Aa - Ab);
  const double dW = operator_norm_exact(Wa - Wb);
  const double a_term = dA > 0.0 ? g0 / (1.0 - g0) * (l1 / l2) * dA : 0.0;
  gap.bound = X.norm() / (1.0 - g0) * (a_term + dW);
  return gap;
}

}  // namespace ieq
