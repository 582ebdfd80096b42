#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ieq/implicit_grad.hpp"
#include "ieq/init.hpp"
#include "ieq/types.hpp"

namespace ieq {

enum class TrainMode { kStrict, kExperiment };

struct TrainConfig {
  double eta = 1e-3;
  int epochs = 1;
  // When unset, solver options derive from the mode each epoch: strict uses
  // tol 1e-10 * max(1, ||Phi||_F), experiment uses tol 1e-2 with cap 100.
  std::optional<SolveOptions> forward_opts;
  std::optional<SolveOptions> adjoint_opts;
  bool monitor_spectral = true;
  int monitor_every = 1;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kStrict;
  bool warm_start = false;
};

struct TrainRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;          // NaN when no test set
  double A_opnorm = 0.0;
  double gammaA_opnorm = 0.0;
  double sigma_min_Z = 0.0;        // NaN when spectral monitoring is off
  int forward_iters = 0;
  int adjoint_iters = 0;
  double rate_envelope = 0.0;      // NaN without an init report

  // Monitors beyond the CSV schema, kept in memory for guarantee checks.
  double w_opnorm = 0.0;
  double b_norm = 0.0;
  bool forward_converged = true;
  bool adjoint_converged = true;
};

struct TrainLog {
  TrainConfig config;
  std::optional<InitReport> report;
  std::vector<TrainRow> rows;
  // Accumulated over every training step (the final evaluation excluded).
  std::int64_t total_forward_iters = 0;
  std::int64_t total_adjoint_iters = 0;
  int steps = 0;
};

struct TrainResult {
  Params final;
  TrainLog log;
};

// Full-batch gradient descent theta <- theta - eta * dL/dtheta with per-epoch
// monitors. Strict mode halts (NonContractiveError) the first epoch with
// gamma ||A(k)|| >= 1 and rejects eta > report.eta_max; experiment mode
// tolerates capped solvers and flags them in the rows.
TrainResult train(const Params& params, const Dataset& data,
                  const TrainConfig& config,
                  const Dataset* test = nullptr,
                  const InitReport* report = nullptr);

struct GuaranteeViolation {
  int epoch = 0;
  std::string quantity;
  double observed = 0.0;
  double bound = 0.0;
};

// Re-checks the certified-descent guarantees on every logged row: the three
// norm caps, sigma_min(Z(k)) >= alpha0/2, and the rate envelope
// (1 - eta alpha0^2/4)^k L(0). Empty result means the run is certified.
std::vector<GuaranteeViolation> verify_guarantees(const TrainLog& log,
                                                  const InitReport& report);

struct GammaSweepCell {
  double gamma = 0.0;
  double avg_forward_iters = 0.0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;    // NaN when no test set
  double max_gammaA_opnorm = 0.0;
  std::string error;               // empty on success
  TrainLog log;
};

// Experiment-protocol sweep over gamma: width-m identity initialization per
// cell (same seed), experiment-mode training, per-epoch forward-iteration
// averages over the whole run. Per-cell failures are recorded, not thrown.
std::vector<GammaSweepCell> gamma_sweep(const Dataset& data, Eigen::Index m,
                                        const std::vector<double>& gammas,
                                        const TrainConfig& base,
                                        const Dataset* test = nullptr);

// CSV serialization: columns exactly
//   epoch,train_loss,test_loss,A_opnorm,gammaA_opnorm,sigma_min_Z,
//   forward_iters,adjoint_iters,rate_envelope
// with NaN fields rendered empty, plus a {config, init_report} JSON sidecar.
// Both files are written atomically (temp + rename).
std::string to_csv(const TrainLog& log);
std::string sidecar_json(const TrainLog& log);
void save_train_log(const TrainLog& log, const std::string& csv_path,
                    const std::string& sidecar_path);

// Write-to-temp-then-rename, creating parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ieq
