#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ieq/data.hpp"
#include "ieq/init.hpp"
#include "ieq/trainer.hpp"
#include "ieq/types.hpp"

namespace ieq::cli {

// Config-file problems (syntax, unknown keys, bad values) all surface as this;
// main maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string type;  // "synthetic" | "idx"
  // synthetic
  Eigen::Index n = 200;
  Eigen::Index d = 20;
  std::string label_mode = "signs";  // "signs" | "teacher"
  Eigen::Index test_n = 0;
  // idx
  std::string images;
  std::string labels;
  std::string test_images;
  std::string test_labels;
  std::pair<std::uint8_t, std::uint8_t> classes{0, 1};
  std::size_t per_class = 500;
  std::size_t test_per_class = 0;  // 0: same as per_class
  bool normalize = true;
};

struct InitSpec {
  std::string type;  // "identity" | "deterministic" | "random" | "files"
  Eigen::Index m = 0;
  double gamma = 0.5;  // identity / files
  double beta = 1.0;   // identity / deterministic
  bool auto_scale = false;  // deterministic: double beta until GD conditions hold
  double c1 = 1.0, c2 = 1.0, c3 = 1.0;
  std::string W, A, b;  // files: CSV paths
};

struct TrainSpec {
  double eta = 1e-3;
  int epochs = 1;
  bool monitor_spectral = true;
  int monitor_every = 1;
  bool warm_start = false;
  std::optional<double> forward_tol, adjoint_tol;
  std::optional<int> forward_max_iter, adjoint_max_iter;
};

struct SweepSpec {
  std::vector<double> gamma;
  std::vector<Eigen::Index> width;
  std::vector<double> eta;
};

struct GradCheckSpec {
  double fd_step = 1e-6;
  int unroll_steps = 80;
  double tol = 1e-5;
  std::optional<double> adjoint_tol;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string mode = "strict";  // "strict" | "experiment"
  std::string out = "out";
  std::optional<DatasetSpec> dataset;
  std::optional<InitSpec> init;
  TrainSpec train;
  std::optional<SweepSpec> sweep;
  GradCheckSpec grad_check;
};

RunConfig parse_run_config(const std::string& path);

struct BuiltData {
  Dataset train;
  std::optional<Dataset> test;
};

BuiltData build_dataset(const DatasetSpec& spec, std::uint64_t seed);
Params build_params(const InitSpec& spec, const Dataset& data,
                    std::uint64_t seed);
TrainConfig build_train_config(const RunConfig& cfg);
Matrix load_csv_matrix(const std::string& path);

const DatasetSpec& require_dataset(const RunConfig& cfg);
const InitSpec& require_init(const RunConfig& cfg);

}  // namespace ieq::cli
