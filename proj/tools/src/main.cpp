#include <cerrno>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "ieq/errors.hpp"

namespace {

using namespace ieq::cli;

std::uint64_t parse_seed_env(const char* text) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text, &end, 10);
  if (errno != 0 || end == text || *end != '\0') {
    throw ConfigError(std::string("IMPLICIT_EQ_SEED is not an integer: \"") +
                      text + "\"");
  }
  return v;
}

RunConfig load_config(const std::string& path, const std::string& out_override,
                      const std::string& mode_override) {
  RunConfig cfg = parse_run_config(path);
  if (const char* env = std::getenv("IMPLICIT_EQ_SEED")) {
    cfg.seed = parse_seed_env(env);
  }
  if (!out_override.empty()) cfg.out = out_override;
  if (!mode_override.empty()) cfg.mode = mode_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilibrium-network training, checking and sweeping"};
  app.require_subcommand(1);

  std::string config_path, out_override, mode_override;
  int parallel = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")
        ->required();
    cmd->add_option("--out", out_override, "output directory override");
    cmd->add_option("--mode", mode_override, "solver mode override")
        ->check(CLI::IsMember({"strict", "experiment"}));
  };

  CLI::App* check = app.add_subcommand(
      "check-init", "evaluate the convergence conditions at initialization");
  add_common(check);
  CLI::App* train = app.add_subcommand(
      "train", "run gradient descent and write the log CSV + JSON sidecar");
  add_common(train);
  CLI::App* sweep = app.add_subcommand(
      "sweep", "train one cell per value on a single swept axis");
  add_common(sweep);
  sweep->add_option("--parallel", parallel, "concurrent sweep cells")
      ->check(CLI::PositiveNumber);
  CLI::App* grad = app.add_subcommand(
      "grad-check", "compare the implicit gradients against the oracles");
  add_common(grad);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    const RunConfig cfg = load_config(config_path, out_override, mode_override);
    if (check->parsed()) return cmd_check_init(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, parallel);
    return cmd_grad_check(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ieq::Error& e) {
    // Everything else thrown while assembling inputs traces back to what the
    // config references (missing files, malformed IDX data, bad shapes).
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
