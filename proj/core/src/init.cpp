#include "ieq/init.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ieq/errors.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"

namespace ieq {

void to_json(nlohmann::json& j, const InitReport& r) {
  j = nlohmann::json{
      {"alpha0", r.alpha0},
      {"lambda1", r.lambda1},
      {"lambda2", r.lambda2},
      {"lambda3", r.lambda3},
      {"lambda0", r.lambda0},
      {"gamma0", r.gamma0},
      {"C1", r.C1},
      {"C2", r.C2},
      {"C3", r.C3},
      {"gf_conditions", r.gf_conditions},
      {"gd_conditions", r.gd_conditions},
      {"eta_max", r.eta_max},
      {"lambda_bar", r.lambda_bar},
      {"initial_residual_norm", r.initial_residual_norm},
  };
}

void from_json(const nlohmann::json& j, InitReport& r) {
  j.at("alpha0").get_to(r.alpha0);
  j.at("lambda1").get_to(r.lambda1);
  j.at("lambda2").get_to(r.lambda2);
  j.at("lambda3").get_to(r.lambda3);
  j.at("lambda0").get_to(r.lambda0);
  j.at("gamma0").get_to(r.gamma0);
  j.at("C1").get_to(r.C1);
  j.at("C2").get_to(r.C2);
  j.at("C3").get_to(r.C3);
  j.at("gf_conditions").get_to(r.gf_conditions);
  j.at("gd_conditions").get_to(r.gd_conditions);
  j.at("eta_max").get_to(r.eta_max);
  j.at("lambda_bar").get_to(r.lambda_bar);
  j.at("initial_residual_norm").get_to(r.initial_residual_norm);
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev,
                       std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0.0, stddev);
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = nd(gen);
  }
  return M;
}

}  // namespace

Params deterministic_init(const Matrix& X, Eigen::Index m, double beta,
                          std::uint64_t seed) {
  const Eigen::Index N = X.rows();
  const Eigen::Index d = X.cols();
  if (N == 0 || d == 0) throw ShapeError("deterministic_init: empty X");
  if (m < N) {
    std::ostringstream msg;
    msg << "deterministic_init: width " << m << " below sample count " << N;
    throw WidthTooSmallError(msg.str());
  }
  if (!(beta > 0.0)) throw ShapeError("deterministic_init: beta must be positive");

  std::mt19937_64 gen(seed);
  const Matrix W1 = gaussian_matrix(d, m, 1.0 / std::sqrt(double(m)), gen);
  const double w1 = operator_norm_exact(W1);

  Params p;
  p.W = beta * W1;
  p.A = (beta * w1) * Matrix::Identity(m, m);
  p.b = Vector::Zero(m);
  // gamma0 = gamma (||A|| + 1) pinned to 1/2.
  p.gamma = 0.5 / (beta * w1 + 1.0);
  return p;
}

Params random_init(Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
  if (d < 1 || m < 1) throw ShapeError("random_init: d and m must be positive");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  Params p;
  p.b.resize(m);
  const double bstd = 1.0 / std::sqrt(double(m));
  for (Eigen::Index i = 0; i < m; ++i) p.b(i) = bstd * nd(gen);
  p.A.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) p.A(i, j) = std::abs(nd(gen));
  }
  p.W.resize(d, m);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) p.W(i, j) = nd(gen);
  }
  p.gamma = 0.5 / operator_norm(p.A);
  return p;
}

Params identity_init(Eigen::Index d, Eigen::Index m, double gamma,
                     std::uint64_t seed, double beta) {
  if (d < 1 || m < 1) throw ShapeError("identity_init: d and m must be positive");
  if (!(beta > 0.0)) throw ShapeError("identity_init: beta must be positive");
  std::mt19937_64 gen(seed);
  Params p;
  p.W = beta * gaussian_matrix(d, m, 1.0 / std::sqrt(double(m)), gen);
  p.A = beta * Matrix::Identity(m, m);
  p.b = Vector::Zero(m);
  p.gamma = gamma;
  return p;
}

InitReport check_conditions(const Params& p, const Dataset& data, double C1,
                            double C2, double C3, const SolveOptions* opts) {
  validate(p, data);
  if (!(C1 > 0.0) || !(C2 > 0.0) || !(C3 > 0.0)) {
    throw ShapeError("check_conditions: C1, C2, C3 must be positive");
  }

  InitReport rep;
  rep.C1 = C1;
  rep.C2 = C2;
  rep.C3 = C3;
  rep.lambda1 = operator_norm(p.W) + C1;
  rep.lambda2 = operator_norm(p.A) + C2;
  rep.lambda3 = p.b.norm() + C3;
  rep.gamma0 = p.gamma * rep.lambda2;
  if (rep.gamma0 >= 1.0) {
    std::ostringstream msg;
    msg << "check_conditions: gamma0 = gamma*(||A||+C2) = " << rep.gamma0
        << " >= 1";
    throw GammaTooLargeError(msg.str());
  }

  const Matrix Phi = feature_map(data.X, p.W);
  const SolveOptions solve = opts != nullptr ? *opts : strict_defaults(Phi);
  const EquilibriumState state = solve_forward(p, Phi, solve);
  if (!state.converged) {
    throw NotConvergedError("check_conditions: forward solve hit max_iter");
  }

  const Eigen::Index N = data.X.rows();
  rep.alpha0 =
      N <= p.width() ? smallest_singular_value(state.Z) : 0.0;
  rep.initial_residual_norm = (predict(state.Z, p.b) - data.y).norm();

  const double g0 = rep.gamma0;
  const double omg = 1.0 - g0;
  const double l1 = rep.lambda1, l2 = rep.lambda2, l3 = rep.lambda3;
  rep.lambda0 = std::max({l1 / C3, g0 * l1 * l3 / (omg * C2 * l2), l3 / C1});
  const double B = 1.0 + (g0 * g0) / (omg * omg) * (l1 * l1) / (l2 * l2);
  const double xf = data.X.norm();
  const double r0 = rep.initial_residual_norm;
  const double a2 = rep.alpha0 * rep.alpha0;
  const double a3 = a2 * rep.alpha0;

  rep.gf_conditions[0] = a2 >= 4.0 / omg * rep.lambda0 * xf * r0;
  rep.gf_conditions[1] = a3 >= B * 8.0 * l3 / (omg * omg) * xf * xf * r0;
  rep.gd_conditions[0] = a2 >= 8.0 / omg * rep.lambda0 * xf * r0;
  rep.gd_conditions[1] = a3 >= B * 16.0 * l3 / (omg * omg) * xf * xf * r0;
  rep.gd_conditions[2] = a2 >= B * 16.0 * l3 * l3 / (omg * omg) * xf * xf;

  const double inner = B / (l1 * l1) + 1.0 / (l3 * l3);
  rep.lambda_bar = B / (inner * inner);
  rep.eta_max = std::min(
      4.0 / a2, 2.0 * omg * omg * rep.lambda_bar /
                    (l1 * l1 * l1 * l1 * l3 * l3 * xf * xf));
  return rep;
}

ScaleResult scale_to_satisfy(const Params& p, const Dataset& data, double C1,
                             double C2, double C3, const SolveOptions* opts) {
  validate(p, data);
  const Matrix Phi1 = feature_map(data.X, p.W);
  const Eigen::Index N = data.X.rows();
  const double phi_min =
      N <= p.width() ? smallest_singular_value(Phi1) : 0.0;
  if (phi_min <= 1e-12) {
    throw DegenerateFeaturesError(
        "scale_to_satisfy: sigma_min(Phi(0)) <= 1e-12; no beta can work");
  }
  const double a1 = operator_norm(p.A);

  const double cap = std::pow(2.0, 40);
  for (double beta = 1.0; beta <= cap; beta *= 2.0) {
    Params q;
    q.W = beta * p.W;
    q.A = beta * p.A;
    q.b = beta * p.b;
    q.gamma = 0.5 / (beta * a1 + C2);
    InitReport rep = check_conditions(q, data, C1, C2, C3, opts);
    if (rep.gd_all()) {
      return ScaleResult{beta, std::move(q), std::move(rep)};
    }
  }
  throw BetaCapExceededError(
      "scale_to_satisfy: conditions still failing at beta = 2^40");
}

LambdaStarEstimate estimate_lambda_star(const Matrix& X, std::int64_t samples,
                                        std::uint64_t seed) {
  const Eigen::Index N = X.rows();
  const Eigen::Index d = X.cols();
  if (N < 1 || d < 1) throw ShapeError("estimate_lambda_star: empty X");
  if (samples < 1) {
    throw ShapeError("estimate_lambda_star: samples must be positive");
  }

  Matrix G = Matrix::Zero(N, N);
  Vector w(d), u(N);
  {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::int64_t s = 0; s < samples; ++s) {
      for (Eigen::Index i = 0; i < d; ++i) w(i) = nd(gen);
      u.noalias() = X * w;
      u = u.cwiseMax(0.0);
      G.noalias() += u * u.transpose();
    }
  }
  G /= double(samples);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const Vector v = es.eigenvectors().col(0);

  LambdaStarEstimate est;
  est.value = std::max(es.eigenvalues()(0), 0.0);
  est.samples = samples;

  // Delete-1 jackknife of the linearized eigenvalue: the influence values
  // s_i = (v' u_i)^2 average to lambda_min exactly, and their jackknife SE is
  // the usual standard error of the mean. Second pass replays the stream.
  if (samples >= 2) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t s = 0; s < samples; ++s) {
      for (Eigen::Index i = 0; i < d; ++i) w(i) = nd(gen);
      u.noalias() = X * w;
      u = u.cwiseMax(0.0);
      const double proj = v.dot(u);
      const double val = proj * proj;
      const double delta = val - mean;
      mean += delta / double(s + 1);
      m2 += delta * (val - mean);
    }
    est.standard_error =
        std::sqrt(m2 / (double(samples) * double(samples - 1)));
  }
  return est;
}

}  // namespace ieq
