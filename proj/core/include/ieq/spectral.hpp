#pragma once

#include <cstdint>

#include "ieq/equilibrium.hpp"
#include "ieq/types.hpp"

namespace ieq {

// Largest singular value by power iteration on the Gram matrix, relative
// tolerance tol, deterministic under the given seed. Iteration cap
// 10 * max(rows, cols); falls back to a full SVD if the cap is hit.
double operator_norm(const Matrix& M, double tol = 1e-12, std::uint64_t seed = 0);

// Exact largest singular value via dense SVD.
double operator_norm_exact(const Matrix& M);

// Smallest singular value of a wide-or-square matrix (rows <= cols), dense SVD.
double smallest_singular_value(const Matrix& M);

struct GramDiagnostics {
  Matrix H;                    // N x N
  double lambda_min_H = 0.0;
  double sigma_min_Z = 0.0;
  // Smallest eigenvalues of the three PSD summands Z Z', M M', Pi Pi'.
  double lambda_min_ZZt = 0.0;
  double lambda_min_MMt = 0.0;
  double lambda_min_PiPit = 0.0;
};

// Dense assembly of the prediction-gradient Gram matrix
//   H = Z Z' + M M' + Pi Pi',
//   M  = gamma (b' ⊗ I_N) Q^{-1} D (I_m ⊗ Z),
//   Pi =        (b' ⊗ I_N) Q^{-1} D E (I_m ⊗ X),
// with Q = I - gamma D (A' ⊗ I_N). Refuses N*m > 4096 (TooLargeError).
GramDiagnostics gram_matrix(const EquilibriumState& state, const Params& p,
                            const Matrix& X);

}  // namespace ieq
