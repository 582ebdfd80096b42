#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ieq/equilibrium.hpp"
#include "ieq/errors.hpp"
#include "ieq/implicit_grad.hpp"
#include "ieq/model.hpp"
#include "ieq/verify.hpp"

namespace ieq::cli {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n') c = ' ';
  }
  return s;
}

std::optional<InitReport> maybe_report(const RunConfig& cfg, const Params& p,
                                       const Dataset& data) {
  if (cfg.mode != "strict") return std::nullopt;
  const InitSpec& init = require_init(cfg);
  return check_conditions(p, data, init.c1, init.c2, init.c3);
}

}  // namespace

int cmd_check_init(const RunConfig& cfg) {
  const InitSpec& init = require_init(cfg);
  const BuiltData built = build_dataset(require_dataset(cfg), cfg.seed);
  const Params p = build_params(init, built.train, cfg.seed);
  try {
    const InitReport report =
        check_conditions(p, built.train, init.c1, init.c2, init.c3);
    std::cout << nlohmann::json(report).dump(2) << "\n";
    return report.gd_all() ? kExitOk : kExitCheckFailed;
  } catch (const GammaTooLargeError& e) {
    std::cerr << "well-posedness error: " << e.what() << "\n";
    return kExitWellPosedness;
  }
}

int cmd_train(const RunConfig& cfg) {
  const BuiltData built = build_dataset(require_dataset(cfg), cfg.seed);
  const Params p = build_params(require_init(cfg), built.train, cfg.seed);
  const TrainConfig tc = build_train_config(cfg);
  try {
    const std::optional<InitReport> report = maybe_report(cfg, p, built.train);
    const TrainResult result =
        train(p, built.train, tc, built.test ? &*built.test : nullptr,
              report ? &*report : nullptr);
    const std::string csv_path = cfg.out + "/train_log.csv";
    const std::string sidecar_path = cfg.out + "/train_log.json";
    save_train_log(result.log, csv_path, sidecar_path);
    std::cout << "wrote " << csv_path << "\n" << "wrote " << sidecar_path << "\n";
    const TrainRow& last = result.log.rows.back();
    std::cout << "final epoch=" << last.epoch
              << " train_loss=" << fmt(last.train_loss);
    if (!std::isnan(last.test_loss)) {
      std::cout << " test_loss=" << fmt(last.test_loss);
    }
    std::cout << "\n";
    return kExitOk;
  } catch (const GammaTooLargeError& e) {
    std::cerr << "well-posedness error: " << e.what() << "\n";
    return kExitWellPosedness;
  } catch (const StepSizeRejectedError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NonContractiveError& e) {
    std::cerr << "training halt: " << e.what() << "\n";
    return kExitTrainingHalt;
  } catch (const DivergenceError& e) {
    std::cerr << "training halt: " << e.what() << "\n";
    return kExitTrainingHalt;
  } catch (const NotConvergedError& e) {
    std::cerr << "training halt: " << e.what() << "\n";
    return kExitTrainingHalt;
  } catch (const UnconvergedAdjointError& e) {
    std::cerr << "training halt: " << e.what() << "\n";
    return kExitTrainingHalt;
  }
}

namespace {

struct SweepCellResult {
  std::string label;       // filename-safe axis value
  std::string axis_value;  // precise value for the summary column
  double avg_forward_iters = std::numeric_limits<double>::quiet_NaN();
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
  double final_test_loss = std::numeric_limits<double>::quiet_NaN();
  double max_gammaA = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

}  // namespace

int cmd_sweep(const RunConfig& cfg, int parallel) {
  if (!cfg.sweep) throw ConfigError("missing key \"sweep\"");
  const SweepSpec& sweep = *cfg.sweep;
  const InitSpec& init = require_init(cfg);

  std::string axis;
  std::size_t n_cells = 0;
  if (!sweep.gamma.empty()) {
    axis = "gamma";
    n_cells = sweep.gamma.size();
    if (init.type != "identity" && init.type != "files") {
      throw ConfigError("sweep.gamma requires init.type \"identity\" or \"files\"");
    }
  } else if (!sweep.width.empty()) {
    axis = "width";
    n_cells = sweep.width.size();
    if (init.type == "files") {
      throw ConfigError("sweep.width cannot be combined with init.type \"files\"");
    }
  } else {
    axis = "eta";
    n_cells = sweep.eta.size();
  }

  const BuiltData built = build_dataset(require_dataset(cfg), cfg.seed);
  const Dataset* test = built.test ? &*built.test : nullptr;

  std::vector<SweepCellResult> results(n_cells);
  auto run_cell = [&](std::size_t i) {
    SweepCellResult& cell = results[i];
    InitSpec cell_init = init;
    TrainConfig tc = build_train_config(cfg);
    if (axis == "gamma") {
      cell_init.gamma = sweep.gamma[i];
      cell.axis_value = fmt(sweep.gamma[i]);
      cell.label = fmt_short(sweep.gamma[i]);
    } else if (axis == "width") {
      cell_init.m = sweep.width[i];
      cell.axis_value = std::to_string(sweep.width[i]);
      cell.label = std::to_string(sweep.width[i]);
    } else {
      tc.eta = sweep.eta[i];
      cell.axis_value = fmt(sweep.eta[i]);
      cell.label = fmt_short(sweep.eta[i]);
    }
    try {
      const Params p = build_params(cell_init, built.train, cfg.seed);
      std::optional<InitReport> report;
      if (cfg.mode == "strict") {
        report = check_conditions(p, built.train, init.c1, init.c2, init.c3);
      }
      const TrainResult result =
          train(p, built.train, tc, test, report ? &*report : nullptr);
      const TrainLog& log = result.log;
      cell.avg_forward_iters =
          double(log.total_forward_iters) / double(log.steps);
      cell.final_train_loss = log.rows.back().train_loss;
      cell.final_test_loss = log.rows.back().test_loss;
      cell.max_gammaA = 0.0;
      for (const TrainRow& row : log.rows) {
        if (!std::isnan(row.gammaA_opnorm)) {
          cell.max_gammaA = std::max(cell.max_gammaA, row.gammaA_opnorm);
        }
      }
      const std::string stem = cfg.out + "/" + axis + "_" + cell.label;
      save_train_log(log, stem + ".csv", stem + ".json");
    } catch (const Error& e) {
      cell.status = e.what();
    } catch (const ConfigError& e) {
      cell.status = e.what();
    }
  };

  const int workers = std::max(1, std::min<int>(parallel, int(n_cells)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n_cells; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n_cells;
             i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  std::ostringstream summary;
  summary << axis
          << ",avg_forward_iters,final_train_loss,final_test_loss,"
             "max_gammaA_opnorm,status\n";
  bool any_ok = false;
  for (const SweepCellResult& cell : results) {
    summary << cell.axis_value << ',' << fmt(cell.avg_forward_iters) << ','
            << fmt(cell.final_train_loss) << ',' << fmt(cell.final_test_loss)
            << ',' << fmt(cell.max_gammaA) << ',' << csv_safe(cell.status)
            << '\n';
    if (cell.status == "ok") any_ok = true;
    std::cout << axis << "=" << cell.label << ": "
              << (cell.status == "ok"
                      ? "avg_forward_iters=" + fmt_short(cell.avg_forward_iters)
                      : cell.status)
              << "\n";
  }
  const std::string summary_path = cfg.out + "/sweep_summary.csv";
  write_file_atomic(summary_path, summary.str());
  std::cout << "wrote " << summary_path << "\n";
  return any_ok ? kExitOk : kExitCheckFailed;
}

int cmd_grad_check(const RunConfig& cfg) {
  const BuiltData built = build_dataset(require_dataset(cfg), cfg.seed);
  const Dataset& data = built.train;
  const Params p = build_params(require_init(cfg), data, cfg.seed);
  if (data.X.rows() * p.width() > 4096) {
    throw ConfigError("grad-check is desk-scale only: need N * m <= 4096, got " +
                      std::to_string(data.X.rows() * p.width()));
  }

  const Matrix Phi = feature_map(data.X, p.W);
  const SolveOptions fopts = strict_defaults(Phi);
  SolveOptions aopts = fopts;
  aopts.strict = false;
  if (cfg.grad_check.adjoint_tol) aopts.tol = *cfg.grad_check.adjoint_tol;

  try {
    const LossAndGradients prod = loss_and_gradients(p, data, fopts, aopts);
    const Gradients dense = dense_gradients(p, data, fopts);
    const FdOptions fd{cfg.grad_check.fd_step, 1e-4};
    const Gradients diff = finite_diff_gradients(p, data, fd, fopts);
    const Gradients unrolled =
        unrolled_gradients(p, data, cfg.grad_check.unroll_steps);

    auto rel = [](const Matrix& a, const Matrix& b) {
      const double scale = std::max(a.norm(), b.norm());
      if (scale == 0.0) return 0.0;
      return (a - b).norm() / scale;
    };

    struct Entry {
      const char* pair;
      const char* block;
      double err;
    };
    std::vector<Entry> entries;
    auto add_pair = [&](const char* name, const Gradients& other) {
      entries.push_back({name, "dW", rel(prod.grads.dW, other.dW)});
      entries.push_back({name, "dA", rel(prod.grads.dA, other.dA)});
      entries.push_back(
          {name, "db", rel(Matrix(prod.grads.db), Matrix(other.db))});
    };
    add_pair("dense", dense);
    add_pair("finite_diff", diff);
    add_pair("unrolled", unrolled);

    double worst = 0.0;
    for (const Entry& e : entries) {
      std::printf("implicit vs %-12s %-3s max_rel_err=%.3e\n", e.pair, e.block,
                  e.err);
      worst = std::max(worst, e.err);
    }
    std::printf("tolerance %.3e, worst %.3e: %s\n", cfg.grad_check.tol, worst,
                worst <= cfg.grad_check.tol ? "PASS" : "FAIL");
    return worst <= cfg.grad_check.tol ? kExitOk : kExitCheckFailed;
  } catch (const KinkProximityError& e) {
    std::cerr << "check failure: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace ieq::cli
