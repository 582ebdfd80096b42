#pragma once

#include <vector>

#include "ieq/equilibrium.hpp"
#include "ieq/types.hpp"

namespace ieq {

struct AdjointState {
  Matrix V;                  // N x m adjoint solution
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_trace;
};

struct Gradients {
  Matrix dW;   // d x m
  Matrix dA;   // m x m
  Vector db;   // m
};

// Fixed-point iteration V <- r b' + gamma (D ∘ V) A' from V = 0. Solving this
// to a fixed point is the matrix-free transpose solve of the implicit system
// Q' vec(V) = vec(r b'), Q = I - gamma D (A' ⊗ I_N).
AdjointState solve_adjoint(const EquilibriumState& state, const Params& p,
                           const Vector& r, const SolveOptions& opts);

// Loss gradients through the equilibrium:
//   db = Z' r,  dA = gamma Z' (D ∘ V),  dW = X' (E ∘ D ∘ V).
// Requires a converged adjoint unless allow_unconverged is set.
Gradients gradients(const EquilibriumState& state, const AdjointState& adj,
                    const Params& p, const Matrix& X, const Vector& r,
                    bool allow_unconverged = false);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
  EquilibriumState state;
  AdjointState adjoint;
};

// Full pipeline: features, forward solve, residual, adjoint solve, gradients.
// With allow_unconverged the flagged states are used as-is (experiment mode);
// otherwise an unconverged forward solve throws NotConvergedError and an
// unconverged adjoint throws UnconvergedAdjointError.
LossAndGradients loss_and_gradients(const Params& p, const Dataset& data,
                                    const SolveOptions& forward_opts,
                                    const SolveOptions& adjoint_opts,
                                    bool allow_unconverged = false);

}  // namespace ieq
