// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single [PASS]/[FAIL] line. Run with no arguments for the full
// gate or with criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ieq/data.hpp"
#include "ieq/equilibrium.hpp"
#include "ieq/errors.hpp"
#include "ieq/implicit_grad.hpp"
#include "ieq/init.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"
#include "ieq/trainer.hpp"
#include "ieq/verify.hpp"
#include "support/instances.hpp"

namespace {

using namespace ieq;
using ieq::testing::desk_instance;
using ieq::testing::DeskInstance;
using ieq::testing::gaussian;
using ieq::testing::nonnegative_instance;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

double worst_block(const Gradients& a, const Gradients& b) {
  double w = rel_err(a.dW, b.dW);
  w = std::max(w, rel_err(a.dA, b.dA));
  w = std::max(w, rel_err(Matrix(a.db), Matrix(b.db)));
  return w;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// --- 1: implicit gradients vs dense assembly, central differences, unrolling

Outcome criterion1() {
  Timer timer;
  double worst_dense = 0.0, worst_fd = 0.0, worst_unrolled = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DeskInstance inst = desk_instance(seed, 4, 3, 5, 0.5);
    const Matrix Phi = feature_map(inst.data.X, inst.params.W);
    const SolveOptions opts = strict_defaults(Phi);
    const LossAndGradients prod =
        loss_and_gradients(inst.params, inst.data, opts, opts);
    worst_dense = std::max(
        worst_dense,
        worst_block(prod.grads, dense_gradients(inst.params, inst.data, opts)));
    worst_fd = std::max(
        worst_fd,
        worst_block(prod.grads, finite_diff_gradients(inst.params, inst.data,
                                                      FdOptions{1e-6, 1e-4},
                                                      opts)));
    worst_unrolled = std::max(
        worst_unrolled,
        worst_block(prod.grads, unrolled_gradients(inst.params, inst.data, 300)));
  }
  const double elapsed = timer.seconds();
  Outcome out;
  out.pass = worst_dense <= 1e-9 && worst_fd <= 1e-5 && worst_unrolled <= 1e-7 &&
             elapsed < 10.0;
  out.detail = "20 instances, worst rel err dense " + fmt("%.2e", worst_dense) +
               ", fd " + fmt("%.2e", worst_fd) + ", unrolled " +
               fmt("%.2e", worst_unrolled) + fmt(" (%.1fs)", elapsed);
  return out;
}

// --- 2: Picard equilibrium vs closed form, norm bound, contraction ratios

Outcome criterion2() {
  Timer timer;
  double worst_gap = 0.0, worst_excess = -1.0, worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const DeskInstance inst = nonnegative_instance(seed, 6, 4, 8, 0.5);
    const Matrix Phi = feature_map(inst.data.X, inst.params.W);
    const EquilibriumState state =
        solve_forward(inst.params, Phi, strict_defaults(Phi));
    const Matrix closed =
        closed_form_equilibrium(Phi, inst.params.A, inst.params.gamma);
    worst_gap = std::max(worst_gap, (state.Z - closed).norm());
    worst_excess =
        std::max(worst_excess, state.Z.norm() - (Phi.norm() / 0.5 + 1e-9));
    const ContractionDiagnostics diag =
        contraction_diagnostics(state.residual_trace, inst.params);
    worst_ratio = std::max(worst_ratio, diag.max_ratio);
  }
  const double elapsed = timer.seconds();
  Outcome out;
  out.pass = worst_gap <= 1e-8 && worst_excess <= 0.0 &&
             worst_ratio <= 0.5 + 1e-9 && elapsed < 5.0;
  out.detail = "50 instances, worst closed-form gap " + fmt("%.2e", worst_gap) +
               ", worst residual ratio " + fmt("%.12f", worst_ratio) +
               fmt(" (%.1fs)", elapsed);
  return out;
}

// --- 3: perturbation bound on the equilibrium displacement

Outcome criterion3() {
  std::mt19937_64 gen(2024);
  const SolveOptions opts;  // tol 1e-10
  int violations = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (int pair = 0; pair < 50; ++pair) {
    Matrix X = gaussian(3, 2, gen);
    for (Eigen::Index i = 0; i < X.rows(); ++i) X.row(i) /= X.row(i).norm();
    const Matrix Wa = gaussian(2, 4, gen);
    const Matrix Wb = Wa + 0.3 * gaussian(2, 4, gen);
    const Matrix Aa = gaussian(4, 4, gen);
    const Matrix Ab = Aa + 0.3 * gaussian(4, 4, gen);
    const double gamma =
        0.5 / std::max(operator_norm_exact(Aa), operator_norm_exact(Ab));
    const EquilibriumGap gap = equilibrium_gap(Wa, Aa, Wb, Ab, X, gamma, opts);
    if (gap.actual > gap.bound + 10.0 * opts.tol) ++violations;
    if (gap.actual > 0.0) tightest = std::min(tightest, gap.bound / gap.actual);
  }
  Outcome out;
  out.pass = violations == 0;
  out.detail = "50 pairs, " + std::to_string(violations) +
               " violations, tightest bound/actual " + fmt("%.2f", tightest);
  return out;
}

// --- 4: certified descent end to end (and 8: its determinism)

struct CertifiedRun {
  TrainLog log;
  InitReport report;
};

CertifiedRun certified_run(std::uint64_t seed) {
  const Dataset data = synthetic(50, 10, seed);
  const Params base = deterministic_init(data.X, 100, 1.0, seed);
  const ScaleResult scaled = scale_to_satisfy(base, data);
  TrainConfig tc;
  tc.eta = 0.9 * scaled.report.eta_max;
  tc.epochs = 2000;
  tc.mode = TrainMode::kStrict;
  tc.seed = seed;
  const TrainResult res =
      train(scaled.params, data, tc, nullptr, &scaled.report);
  return {res.log, scaled.report};
}

Outcome criterion4() {
  Timer timer;
  std::size_t total_violations = 0;
  std::string first_failure;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CertifiedRun run = certified_run(seed);
    const std::vector<GuaranteeViolation> v =
        verify_guarantees(run.log, run.report);
    total_violations += v.size();
    if (!v.empty() && first_failure.empty()) {
      first_failure = " (first: seed " + std::to_string(seed) + " epoch " +
                      std::to_string(v.front().epoch) + " " + v.front().quantity +
                      ")";
    }
  }
  const double elapsed = timer.seconds();
  Outcome out;
  out.pass = total_violations == 0 && elapsed < 300.0;
  out.detail = "5 seeds x 2000 epochs, " + std::to_string(total_violations) +
               " guarantee violations" + first_failure + fmt(" (%.1fs)", elapsed);
  return out;
}

Outcome criterion8() {
  const std::string first = to_csv(certified_run(0).log);
  const std::string second = to_csv(certified_run(0).log);
  Outcome out;
  out.pass = first == second;
  out.detail = out.pass ? "re-run of the first certified seed reproduced the " +
                              std::to_string(first.size()) + "-byte log bitwise"
                        : "re-run log differs";
  return out;
}

// --- 5: forward-iteration growth across gamma (MNIST when present)

Outcome criterion5() {
  Timer timer;
  const char* env = std::getenv("IEQ_MNIST_DIR");
  const std::string dir =
      env ? env : std::string(IEQ_SOURCE_DIR) + "/data/mnist";
  const std::string images = dir + "/train-images-idx3-ubyte";
  const std::string labels = dir + "/train-labels-idx1-ubyte";
  const bool have_mnist = std::filesystem::exists(images) &&
                          std::filesystem::exists(labels);

  Dataset data;
  Eigen::Index m = 0;
  if (have_mnist) {
    const RawImages raw = load_idx(images, labels);
    data = make_binary_subset(raw, {0, 1}, 500, 0);
    data.X = normalize_rows(data.X);
    m = 1000;
  } else {
    data = synthetic(200, 20, 0);
    m = 200;
  }

  TrainConfig base;
  base.eta = 1e-3;
  base.epochs = 5;
  base.mode = TrainMode::kExperiment;
  base.monitor_spectral = false;
  base.seed = 0;
  const std::vector<double> gammas{0.1, 0.3, 0.5, 0.8};
  const std::vector<GammaSweepCell> cells = gamma_sweep(data, m, gammas, base);

  bool ok = cells.size() == 4;
  std::string iters;
  const double reference[4] = {6.0, 9.0, 15.0, 47.5};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].error.empty()) {
      ok = false;
      iters += (iters.empty() ? "" : " ") + cells[i].error;
      continue;
    }
    if (i > 0 && !(cells[i].avg_forward_iters > cells[i - 1].avg_forward_iters)) {
      ok = false;
    }
    if (have_mnist) {
      const double ratio = cells[i].avg_forward_iters / reference[i];
      if (!(ratio >= 0.5 && ratio <= 2.0)) ok = false;
    }
    iters += (iters.empty() ? "" : "/") + fmt("%.1f", cells[i].avg_forward_iters);
  }
  const double elapsed = timer.seconds();
  if (elapsed >= (have_mnist ? 900.0 : 300.0)) ok = false;
  Outcome out;
  out.pass = ok;
  out.detail = std::string(have_mnist ? "mnist {0,1} N=1000" : "synthetic N=200") +
               ", avg forward iters " + iters + " across gamma 0.1/0.3/0.5/0.8" +
               fmt(" (%.1fs)", elapsed);
  return out;
}

// --- 6: step-size behavior at the scaled protocol size

Outcome criterion6() {
  // Scaled-down replica of the full-size protocol: gamma = 0.1, A(0) = I.
  const Dataset data = synthetic(200, 20, 0);
  const Params p = identity_init(20, 200, 0.1, 0);

  auto run = [&](double eta, int epochs) {
    TrainConfig tc;
    tc.eta = eta;
    tc.epochs = epochs;
    tc.mode = TrainMode::kExperiment;
    tc.monitor_spectral = false;
    tc.seed = 0;
    return train(p, data, tc).log;
  };

  Outcome out;
  out.pass = true;

  const TrainLog hot = run(1e-1, 6);
  int increases = 0;
  for (std::size_t k = 1; k < hot.rows.size(); ++k) {
    const double prev = hot.rows[k - 1].train_loss;
    const double cur = hot.rows[k].train_loss;
    if (std::isfinite(prev) && std::isfinite(cur) && cur > prev) ++increases;
  }
  if (increases < 1) out.pass = false;

  const TrainLog steady = run(5e-3, 500);  // eta = 1/N
  int non_monotone = 0;
  for (std::size_t k = 1; k < steady.rows.size(); ++k) {
    if (steady.rows[k].train_loss >
        steady.rows[k - 1].train_loss * (1.0 + 1e-12)) {
      ++non_monotone;
    }
  }
  if (non_monotone != 0) out.pass = false;

  const TrainLog gentle = run(5e-4, 500);
  if (!std::isfinite(gentle.rows.back().train_loss)) out.pass = false;

  out.detail = "eta 1e-1: " + std::to_string(increases) +
               " loss increases in 6 epochs; eta 1/N: " +
               std::to_string(non_monotone) +
               " monotonicity breaks over 500 epochs (final loss " +
               fmt("%.3e", steady.rows.back().train_loss) +
               "); eta 5e-4 final loss " +
               fmt("%.3e", gentle.rows.back().train_loss);
  return out;
}

// --- 7: Monte-Carlo lambda* estimator

Outcome criterion7() {
  Timer timer;
  Matrix single(1, 8);
  single.setZero();
  single(0, 0) = 1.0;
  const LambdaStarEstimate one = estimate_lambda_star(single, 100000, 7);
  const bool one_ok = std::abs(one.value - 0.5) <= 3.0 * one.standard_error &&
                      one.standard_error > 0.0 && one.standard_error < 0.01;

  const Dataset multi = synthetic(6, 5, 11);
  const LambdaStarEstimate est = estimate_lambda_star(multi.X, 100000, 8);
  const bool multi_ok = est.value <= 1.0 + 3.0 * est.standard_error;

  const double elapsed = timer.seconds();
  Outcome out;
  out.pass = one_ok && multi_ok && elapsed < 10.0;
  out.detail = "single unit row " + fmt("%.4f", one.value) + " +- " +
               fmt("%.4f", one.standard_error) + " vs 0.5; multi-sample " +
               fmt("%.4f", est.value) + fmt(" (%.1fs)", elapsed);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* title;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient agreement", criterion1},
      {2, "equilibrium solver", criterion2},
      {3, "perturbation bound", criterion3},
      {4, "certified descent", criterion4},
      {5, "gamma iteration trend", criterion5},
      {6, "step-size behavior", criterion6},
      {7, "lambda* estimator", criterion7},
      {8, "determinism", criterion8},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s — %s\n", out.pass ? "PASS" : "FAIL",
                c.id, c.title, out.detail.c_str());
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
