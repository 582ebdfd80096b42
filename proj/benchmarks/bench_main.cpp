#include <random>

#include <benchmark/benchmark.h>

#include "ieq/data.hpp"
#include "ieq/equilibrium.hpp"
#include "ieq/implicit_grad.hpp"
#include "ieq/init.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"

namespace {

using namespace ieq;

struct Bench {
  Params p;
  Dataset data;
  Matrix Phi;
};

Bench make(Eigen::Index N, Eigen::Index m, double gamma) {
  Bench b;
  b.data = synthetic(N, 20, 0);
  b.p = identity_init(20, m, gamma, 0);
  b.Phi = feature_map(b.data.X, b.p.W);
  return b;
}

void BM_forward_solve(benchmark::State& state) {
  const Bench b = make(state.range(0), state.range(0),
                       double(state.range(1)) / 10.0);
  const SolveOptions opts = experiment_defaults();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_forward(b.p, b.Phi, opts));
  }
}
BENCHMARK(BM_forward_solve)
    ->ArgsProduct({{100, 200, 400}, {1, 3, 5, 8}})
    ->Unit(benchmark::kMillisecond);

void BM_forward_solve_strict(benchmark::State& state) {
  const Bench b = make(state.range(0), state.range(0), 0.5);
  const SolveOptions opts = strict_defaults(b.Phi);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_forward(b.p, b.Phi, opts));
  }
}
BENCHMARK(BM_forward_solve_strict)
    ->Arg(100)
    ->Arg(200)
    ->Arg(400)
    ->Unit(benchmark::kMillisecond);

void BM_adjoint_solve(benchmark::State& state) {
  const Bench b = make(state.range(0), state.range(0), 0.5);
  Params p = b.p;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (Eigen::Index j = 0; j < p.width(); ++j) p.b[j] = nd(gen);
  const SolveOptions opts = strict_defaults(b.Phi);
  const EquilibriumState eq = solve_forward(p, b.Phi, opts);
  const Vector r = eq.Z * p.b - b.data.y;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_adjoint(eq, p, r, opts));
  }
}
BENCHMARK(BM_adjoint_solve)->Arg(100)->Arg(200)->Arg(400)->Unit(
    benchmark::kMillisecond);

void BM_gradient_pipeline(benchmark::State& state) {
  const Bench b = make(state.range(0), state.range(0), 0.5);
  Params p = b.p;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (Eigen::Index j = 0; j < p.width(); ++j) p.b[j] = nd(gen);
  const SolveOptions opts = experiment_defaults();
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradients(p, b.data, opts, opts, true));
  }
}
BENCHMARK(BM_gradient_pipeline)->Arg(100)->Arg(200)->Arg(400)->Unit(
    benchmark::kMillisecond);

void BM_operator_norm_power(benchmark::State& state) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Matrix A(state.range(0), state.range(0));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = nd(gen);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(operator_norm(A, 1e-9, 7));
  }
}
BENCHMARK(BM_operator_norm_power)->Arg(100)->Arg(400)->Arg(1000);

void BM_operator_norm_svd(benchmark::State& state) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Matrix A(state.range(0), state.range(0));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = nd(gen);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(operator_norm_exact(A));
  }
}
BENCHMARK(BM_operator_norm_svd)->Arg(100)->Arg(400)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
