#pragma once

#include <cstdint>
#include <vector>

#include "ieq/types.hpp"

namespace ieq {

struct SolveOptions {
  double tol = 1e-10;       // absolute Frobenius tolerance on the update norm
  int max_iter = 10000;
  // When set, verify gamma * ||A|| < 1 (power iteration) before iterating and
  // throw NonContractiveError otherwise. Off by default: callers certify.
  bool strict = false;
};

// Tight tolerance scaled to the feature magnitude; library and test default.
SolveOptions strict_defaults(const Matrix& Phi);

// Loose absolute tolerance with a hard iteration cap; experiment protocol.
SolveOptions experiment_defaults();

struct EquilibriumState {
  Matrix Z;                  // N x m fixed point (approximate)
  Mask D_mask;               // relu'(gamma Z A + Phi) at the returned Z, entries {0,1}
  Mask E_mask;               // relu'(X W), recovered as 1[Phi > 0]
  int iterations = 0;
  double residual = 0.0;     // last update norm ||Z_next - Z||_F
  bool converged = false;
  std::vector<double> residual_trace;
};

// Picard iteration Z <- relu(gamma Z A + Phi) from Z = 0 (or z0 when given).
EquilibriumState solve_forward(const Params& p, const Matrix& Phi,
                               const SolveOptions& opts,
                               const Matrix* z0 = nullptr);

// Z = Phi (I - gamma A)^{-1} for entrywise-nonnegative A with gamma ||A|| < 1.
Matrix closed_form_equilibrium(const Matrix& Phi, const Matrix& A, double gamma);

struct ContractionDiagnostics {
  std::vector<double> ratios;   // consecutive residual ratios
  double max_ratio = 0.0;
  double gamma_a_norm = 0.0;    // gamma * ||A||, the certified modulus
};

ContractionDiagnostics contraction_diagnostics(const std::vector<double>& residual_trace,
                                               const Params& p);

struct EquilibriumGap {
  double actual = 0.0;   // ||Z_a - Z_b||_F
  double bound = 0.0;    // certified perturbation bound
};

// Certified bound on the equilibrium displacement under a parameter change:
//   ||Z_a - Z_b||_F <= ||X||_F/(1-g0) * [ g0/(1-g0) * (l1/l2) * ||A_a-A_b|| + ||W_a-W_b|| ]
// with l1 = max ||W||, l2 = max ||A|| (operator norms) and g0 = gamma * l2 < 1.
EquilibriumGap equilibrium_gap(const Matrix& Wa, const Matrix& Aa,
                               const Matrix& Wb, const Matrix& Ab,
                               const Matrix& X, double gamma,
                               const SolveOptions& opts);

}  // namespace ieq
