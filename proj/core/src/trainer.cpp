#include "ieq/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ieq/errors.hpp"
#include "ieq/model.hpp"
#include "ieq/spectral.hpp"

namespace ieq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  return x;
}

SolveOptions resolve_opts(const std::optional<SolveOptions>& explicit_opts,
                          TrainMode mode, const Matrix& Phi) {
  if (explicit_opts) return *explicit_opts;
  return mode == TrainMode::kStrict ? strict_defaults(Phi)
                                    : experiment_defaults();
}

double test_loss_at(const Params& p, const Dataset& test,
                    const SolveOptions& opts) {
  const Matrix Phi = feature_map(test.X, p.W);
  const EquilibriumState state = solve_forward(p, Phi, opts);
  return loss(predict(state.Z, p.b), test.y);
}

std::string fmt_field(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainResult train(const Params& params, const Dataset& data,
                  const TrainConfig& config, const Dataset* test,
                  const InitReport* report) {
  validate(params, data);
  if (test != nullptr) validate(params, *test);
  if (!(config.eta >= 0.0)) throw ShapeError("train: eta must be nonnegative");
  if (config.epochs < 1) throw ShapeError("train: epochs must be >= 1");
  if (config.monitor_every < 1) {
    throw ShapeError("train: monitor_every must be >= 1");
  }
  const bool strict = config.mode == TrainMode::kStrict;
  if (strict && report != nullptr && config.eta > report->eta_max) {
    std::ostringstream msg;
    msg << "train: eta " << config.eta << " exceeds certified bound "
        << report->eta_max;
    throw StepSizeRejectedError(msg.str());
  }
  {
    const double ga = params.gamma * operator_norm(params.A, 1e-9,
                                                   mix_seed(config.seed, 0));
    if (ga >= 1.0) {
      std::ostringstream msg;
      msg << "train: gamma * ||A|| = " << ga << " >= 1 at entry";
      throw NonContractiveError(msg.str());
    }
  }

  TrainResult out;
  out.final = params;
  out.log.config = config;
  if (report != nullptr) out.log.report = *report;

  Params& p = out.final;
  TrainLog& log = out.log;
  double L0 = kNaN;
  Matrix prev_Z;

  auto record = [&](int epoch, double train_loss, double a_opnorm,
                    const EquilibriumState& state, int adjoint_iters,
                    bool adjoint_converged, const SolveOptions& fopts) {
    TrainRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.test_loss = test != nullptr ? test_loss_at(p, *test, fopts) : kNaN;
    row.A_opnorm = a_opnorm;
    row.gammaA_opnorm = p.gamma * a_opnorm;
    row.sigma_min_Z = config.monitor_spectral && state.Z.rows() <= state.Z.cols() &&
                              state.Z.allFinite()
                          ? smallest_singular_value(state.Z)
                          : kNaN;
    row.forward_iters = state.iterations;
    row.adjoint_iters = adjoint_iters;
    if (report != nullptr && !std::isnan(L0)) {
      const double factor =
          1.0 - config.eta * report->alpha0 * report->alpha0 / 4.0;
      row.rate_envelope = std::pow(factor, double(epoch)) * L0;
    } else {
      row.rate_envelope = kNaN;
    }
    row.w_opnorm = operator_norm(p.W, 1e-9, mix_seed(config.seed, 1000003 + epoch));
    row.b_norm = p.b.norm();
    row.forward_converged = state.converged;
    row.adjoint_converged = adjoint_converged;
    log.rows.push_back(std::move(row));
  };

  for (int k = 0; k < config.epochs; ++k) {
    const bool logged = (k % config.monitor_every == 0) || k == 0;
    double a_opnorm = kNaN;
    if (strict || logged) {
      a_opnorm = operator_norm(p.A, 1e-9, mix_seed(config.seed, k));
    }
    if (strict && p.gamma * a_opnorm >= 1.0) {
      std::ostringstream msg;
      msg << "train: halted at epoch " << k << ": gamma * ||A(k)|| = "
          << p.gamma * a_opnorm << " >= 1";
      throw NonContractiveError(msg.str());
    }

    const Matrix Phi = feature_map(data.X, p.W);
    const SolveOptions fopts = resolve_opts(config.forward_opts, config.mode, Phi);
    SolveOptions aopts_default = fopts;
    aopts_default.strict = false;
    const SolveOptions aopts =
        config.adjoint_opts ? *config.adjoint_opts : aopts_default;

    const EquilibriumState state =
        solve_forward(p, Phi, fopts,
                      config.warm_start && prev_Z.size() > 0 ? &prev_Z : nullptr);
    if (strict && !state.converged) {
      throw NotConvergedError("train: forward solve hit max_iter in strict mode");
    }
    const Vector r = predict(state.Z, p.b) - data.y;
    const double train_loss = 0.5 * r.squaredNorm();
    if (k == 0) L0 = train_loss;
    const AdjointState adj = solve_adjoint(state, p, r, aopts);
    if (strict && !adj.converged) {
      throw UnconvergedAdjointError(
          "train: adjoint solve hit max_iter in strict mode");
    }
    const Gradients g = gradients(state, adj, p, data.X, r, !strict);

    log.total_forward_iters += state.iterations;
    log.total_adjoint_iters += adj.iterations;
    log.steps += 1;
    if (logged) {
      record(k, train_loss, a_opnorm, state, adj.iterations, adj.converged,
             fopts);
    }
    if (config.warm_start) prev_Z = state.Z;

    p.W -= config.eta * g.dW;
    p.A -= config.eta * g.dA;
    p.b -= config.eta * g.db;
    if (!p.W.allFinite() || !p.A.allFinite() || !p.b.allFinite()) {
      std::ostringstream msg;
      msg << "train: parameters became non-finite after epoch " << k
          << " (step size too large for this run)";
      throw DivergenceError(msg.str());
    }
  }

  // Final evaluation at theta(epochs); not counted in the iteration totals.
  {
    const int k = config.epochs;
    const double a_opnorm = operator_norm(p.A, 1e-9, mix_seed(config.seed, k));
    const Matrix Phi = feature_map(data.X, p.W);
    const SolveOptions fopts = resolve_opts(config.forward_opts, config.mode, Phi);
    SolveOptions aopts_default = fopts;
    aopts_default.strict = false;
    const SolveOptions aopts =
        config.adjoint_opts ? *config.adjoint_opts : aopts_default;
    const EquilibriumState state = solve_forward(p, Phi, fopts);
    const Vector r = predict(state.Z, p.b) - data.y;
    const AdjointState adj = solve_adjoint(state, p, r, aopts);
    record(k, 0.5 * r.squaredNorm(), a_opnorm, state, adj.iterations,
           adj.converged, fopts);
  }
  return out;
}

std::vector<GuaranteeViolation> verify_guarantees(const TrainLog& log,
                                                  const InitReport& report) {
  std::vector<GuaranteeViolation> violations;
  if (log.rows.empty()) return violations;
  const double L0 = log.rows.front().train_loss;
  const double factor =
      1.0 - log.config.eta * report.alpha0 * report.alpha0 / 4.0;
  const double slack = 1.0 + 1e-12;

  for (const TrainRow& row : log.rows) {
    auto check = [&](const char* name, double observed, double bound) {
      if (!(observed <= bound)) {
        violations.push_back({row.epoch, name, observed, bound});
      }
    };
    check("w_opnorm", row.w_opnorm, report.lambda1 * slack);
    check("A_opnorm", row.A_opnorm, report.lambda2 * slack);
    check("b_norm", row.b_norm, report.lambda3 * slack);
    if (!std::isnan(row.sigma_min_Z) &&
        row.sigma_min_Z < report.alpha0 / 2.0 * (1.0 - 1e-12)) {
      violations.push_back(
          {row.epoch, "sigma_min_Z", row.sigma_min_Z, report.alpha0 / 2.0});
    }
    const double envelope = std::pow(factor, double(row.epoch)) * L0;
    check("rate_envelope", row.train_loss, envelope * slack);
  }
  return violations;
}

std::vector<GammaSweepCell> gamma_sweep(const Dataset& data, Eigen::Index m,
                                        const std::vector<double>& gammas,
                                        const TrainConfig& base,
                                        const Dataset* test) {
  validate(data);
  std::vector<GammaSweepCell> cells;
  cells.reserve(gammas.size());
  for (const double gamma : gammas) {
    GammaSweepCell cell;
    cell.gamma = gamma;
    cell.final_test_loss = kNaN;
    try {
      const Params p = identity_init(data.X.cols(), m, gamma, base.seed);
      TrainConfig config = base;
      config.mode = TrainMode::kExperiment;
      TrainResult result = train(p, data, config, test, nullptr);
      const TrainLog& log = result.log;
      cell.avg_forward_iters =
          double(log.total_forward_iters) / double(log.steps);
      cell.final_train_loss = log.rows.back().train_loss;
      cell.final_test_loss = log.rows.back().test_loss;
      cell.max_gammaA_opnorm = 0.0;
      for (const TrainRow& row : log.rows) {
        if (!std::isnan(row.gammaA_opnorm)) {
          cell.max_gammaA_opnorm =
              std::max(cell.max_gammaA_opnorm, row.gammaA_opnorm);
        }
      }
      cell.log = std::move(result.log);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string to_csv(const TrainLog& log) {
  std::ostringstream out;
  out << "epoch,train_loss,test_loss,A_opnorm,gammaA_opnorm,sigma_min_Z,"
         "forward_iters,adjoint_iters,rate_envelope\n";
  for (const TrainRow& row : log.rows) {
    out << row.epoch << ',' << fmt_field(row.train_loss) << ','
        << fmt_field(row.test_loss) << ',' << fmt_field(row.A_opnorm) << ','
        << fmt_field(row.gammaA_opnorm) << ',' << fmt_field(row.sigma_min_Z)
        << ',' << row.forward_iters << ',' << row.adjoint_iters << ','
        << fmt_field(row.rate_envelope) << '\n';
  }
  return out.str();
}

static nlohmann::json solve_opts_json(const std::optional<SolveOptions>& opts) {
  if (!opts) return nullptr;
  return nlohmann::json{
      {"tol", opts->tol}, {"max_iter", opts->max_iter}, {"strict", opts->strict}};
}

std::string sidecar_json(const TrainLog& log) {
  nlohmann::json j;
  j["config"] = {
      {"eta", log.config.eta},
      {"epochs", log.config.epochs},
      {"forward_opts", solve_opts_json(log.config.forward_opts)},
      {"adjoint_opts", solve_opts_json(log.config.adjoint_opts)},
      {"monitor_spectral", log.config.monitor_spectral},
      {"monitor_every", log.config.monitor_every},
      {"seed", log.config.seed},
      {"mode", log.config.mode == TrainMode::kStrict ? "strict" : "experiment"},
      {"warm_start", log.config.warm_start},
  };
  j["init_report"] = log.report ? nlohmann::json(*log.report)
                                : nlohmann::json(nullptr);
  j["iteration_totals"] = {
      {"total_forward_iters", log.total_forward_iters},
      {"total_adjoint_iters", log.total_adjoint_iters},
      {"training_steps", log.steps},
      {"note", "averages are per training step over the whole run; the final "
               "post-update evaluation row is excluded"},
  };
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

void save_train_log(const TrainLog& log, const std::string& csv_path,
                    const std::string& sidecar_path) {
  write_file_atomic(csv_path, to_csv(log));
  write_file_atomic(sidecar_path, sidecar_json(log));
}

}  // namespace ieq
