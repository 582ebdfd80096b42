#pragma once

#include "ieq/equilibrium.hpp"
#include "ieq/implicit_grad.hpp"
#include "ieq/types.hpp"

namespace ieq {

struct FdOptions {
  double step = 1e-6;
  double kink_margin = 1e-4;
};

// Central differences over every coordinate of W, A, b; each evaluation is a
// full forward solve. Rejects instances where any pre-activation entry of
// gamma Z A + Phi or X W lies within kink_margin of the ReLU kink.
Gradients finite_diff_gradients(const Params& p, const Dataset& data,
                                const FdOptions& fd, const SolveOptions& opts);

// Literal dense assembly of the implicit-function-theorem gradient formulas:
// D = diag(vec relu'(gamma Z A + Phi)), E = diag(vec relu'(X W)),
// Q = I - gamma D (A' ⊗ I_N), u = Q^{-T} (b' ⊗ I_N)' r, then
//   dW = [D E (I_m ⊗ X)]' u,  dA = gamma [D (I_m ⊗ Z)]' u,  db = Z' r.
// Refuses N*m > 4096.
Gradients dense_gradients(const Params& p, const Dataset& data,
                          const SolveOptions& opts);

// Reverse-mode differentiation through the explicitly unrolled Picard
// iteration Z^0 = 0, Z^l = relu(gamma Z^{l-1} A + Phi), truncated at
// unroll_steps. Error vs the implicit gradients decays geometrically at rate
// gamma ||A||.
Gradients unrolled_gradients(const Params& p, const Dataset& data,
                             int unroll_steps);

}  // namespace ieq
