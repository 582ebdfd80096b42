#pragma once

#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "ieq/equilibrium.hpp"
#include "ieq/types.hpp"

namespace ieq {

// Snapshot of every constant the convergence theorems consume, evaluated at
// one parameter point. gf_conditions are the two gradient-flow inequalities,
// gd_conditions the three gradient-descent ones; eta_max is the certified
// step-size bound min{4/alpha0^2, 2(1-g0)^2 lbar / (l1^4 l3^2 ||X||_F^2)}.
struct InitReport {
  double alpha0 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double lambda0 = 0.0;
  double gamma0 = 0.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 1.0;
  std::array<bool, 2> gf_conditions{false, false};
  std::array<bool, 3> gd_conditions{false, false, false};
  double eta_max = 0.0;
  double lambda_bar = 0.0;
  double initial_residual_norm = 0.0;

  bool gf_all() const { return gf_conditions[0] && gf_conditions[1]; }
  bool gd_all() const {
    return gd_conditions[0] && gd_conditions[1] && gd_conditions[2];
  }
};

void to_json(nlohmann::json& j, const InitReport& r);
void from_json(const nlohmann::json& j, InitReport& r);

// W(0) ~ N(0, 1/m) i.i.d., A(0) = ||W(0)|| I_m, b(0) = 0, all scaled by beta;
// gamma chosen so gamma0 = gamma (||A(0)|| + 1) = 1/2.
Params deterministic_init(const Matrix& X, Eigen::Index m, double beta,
                          std::uint64_t seed);

// b(0) ~ N(0, 1/m), A(0) ~ half-normal |N(0,1)|, W(0) ~ N(0,1), i.i.d.;
// gamma chosen so gamma ||A(0)|| = 1/2.
Params random_init(Eigen::Index d, Eigen::Index m, std::uint64_t seed);

// W(0) ~ N(0, 1/m), A(0) = I_m, b(0) = 0, scaled by beta; gamma supplied.
// The experiment-protocol initialization behind the sweeps.
Params identity_init(Eigen::Index d, Eigen::Index m, double gamma,
                     std::uint64_t seed, double beta = 1.0);

InitReport check_conditions(const Params& p, const Dataset& data,
                            double C1 = 1.0, double C2 = 1.0, double C3 = 1.0,
                            const SolveOptions* opts = nullptr);

struct ScaleResult {
  double beta = 1.0;
  Params params;
  InitReport report;
};

// Doubles beta from 1 until the gradient-descent conditions pass, re-deriving
// gamma each time so gamma0 stays 1/2. Requires sigma_min(Phi(0)) > 0 at the
// unscaled point; beta capped at 2^40.
ScaleResult scale_to_satisfy(const Params& p, const Dataset& data,
                             double C1 = 1.0, double C2 = 1.0, double C3 = 1.0,
                             const SolveOptions* opts = nullptr);

struct LambdaStarEstimate {
  double value = 0.0;
  std::int64_t samples = 0;
  double standard_error = 0.0;
};

// Monte-Carlo estimate of the smallest eigenvalue of
// E_{w ~ N(0, I_d)}[relu(Xw) relu(Xw)'] with a jackknife standard error.
LambdaStarEstimate estimate_lambda_star(const Matrix& X, std::int64_t samples,
                                        std::uint64_t seed);

}  // namespace ieq
