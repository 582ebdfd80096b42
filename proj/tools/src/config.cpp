#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ieq/errors.hpp"

namespace ieq::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& prefix,
                const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      fail("unknown key \"" + prefix + item.key() + "\"");
    }
  }
}

template <typename T>
T get_field(const json& obj, const std::string& prefix, const std::string& key,
            T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for key \"" + prefix + key + "\"");
  }
}

template <typename T>
T require_field(const json& obj, const std::string& prefix,
                const std::string& key) {
  if (!obj.contains(key)) fail("missing key \"" + prefix + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for key \"" + prefix + key + "\"");
  }
}

DatasetSpec parse_dataset(const json& obj) {
  if (!obj.is_object()) fail("\"dataset\" must be an object");
  DatasetSpec spec;
  spec.type = require_field<std::string>(obj, "dataset.", "type");
  if (spec.type == "synthetic") {
    check_keys(obj, "dataset.", {"type", "n", "d", "label_mode", "test_n"});
    spec.n = get_field<Eigen::Index>(obj, "dataset.", "n", spec.n);
    spec.d = get_field<Eigen::Index>(obj, "dataset.", "d", spec.d);
    spec.label_mode =
        get_field<std::string>(obj, "dataset.", "label_mode", spec.label_mode);
    spec.test_n = get_field<Eigen::Index>(obj, "dataset.", "test_n", spec.test_n);
    if (spec.label_mode != "signs" && spec.label_mode != "teacher") {
      fail("\"dataset.label_mode\" must be \"signs\" or \"teacher\"");
    }
    if (spec.n < 1 || spec.d < 1) fail("\"dataset.n\" and \"dataset.d\" must be positive");
    if (spec.test_n < 0) fail("\"dataset.test_n\" must be nonnegative");
  } else if (spec.type == "idx") {
    check_keys(obj, "dataset.",
               {"type", "images", "labels", "test_images", "test_labels",
                "classes", "per_class", "test_per_class", "normalize"});
    spec.images = require_field<std::string>(obj, "dataset.", "images");
    spec.labels = require_field<std::string>(obj, "dataset.", "labels");
    spec.test_images =
        get_field<std::string>(obj, "dataset.", "test_images", "");
    spec.test_labels =
        get_field<std::string>(obj, "dataset.", "test_labels", "");
    if (spec.test_images.empty() != spec.test_labels.empty()) {
      fail("\"dataset.test_images\" and \"dataset.test_labels\" must be given together");
    }
    if (obj.contains("classes")) {
      const json& cls = obj.at("classes");
      if (!cls.is_array() || cls.size() != 2 || !cls[0].is_number_integer() ||
          !cls[1].is_number_integer()) {
        fail("\"dataset.classes\" must be an array of two integers");
      }
      const long long a = cls[0].get<long long>(), b = cls[1].get<long long>();
      if (a < 0 || a > 255 || b < 0 || b > 255 || a == b) {
        fail("\"dataset.classes\" entries must be distinct labels in [0, 255]");
      }
      spec.classes = {std::uint8_t(a), std::uint8_t(b)};
    }
    spec.per_class =
        get_field<std::size_t>(obj, "dataset.", "per_class", spec.per_class);
    spec.test_per_class = get_field<std::size_t>(obj, "dataset.",
                                                 "test_per_class", 0);
    spec.normalize = get_field<bool>(obj, "dataset.", "normalize", true);
    if (spec.per_class < 1) fail("\"dataset.per_class\" must be positive");
  } else {
    fail("\"dataset.type\" must be \"synthetic\" or \"idx\"");
  }
  return spec;
}

InitSpec parse_init(const json& obj) {
  if (!obj.is_object()) fail("\"init\" must be an object");
  InitSpec spec;
  spec.type = require_field<std::string>(obj, "init.", "type");
  const std::set<std::string> common = {"type", "m", "c1", "c2", "c3"};
  auto with = [&](std::initializer_list<const char*> extra) {
    std::set<std::string> keys = common;
    for (const char* k : extra) keys.insert(k);
    return keys;
  };
  if (spec.type == "identity") {
    check_keys(obj, "init.", with({"gamma", "beta"}));
    spec.gamma = require_field<double>(obj, "init.", "gamma");
    spec.beta = get_field<double>(obj, "init.", "beta", 1.0);
  } else if (spec.type == "deterministic") {
    check_keys(obj, "init.", with({"beta", "auto_scale"}));
    spec.beta = get_field<double>(obj, "init.", "beta", 1.0);
    spec.auto_scale = get_field<bool>(obj, "init.", "auto_scale", false);
  } else if (spec.type == "random") {
    check_keys(obj, "init.", with({}));
  } else if (spec.type == "files") {
    check_keys(obj, "init.", with({"gamma", "W", "A", "b"}));
    spec.gamma = require_field<double>(obj, "init.", "gamma");
    spec.W = require_field<std::string>(obj, "init.", "W");
    spec.A = require_field<std::string>(obj, "init.", "A");
    spec.b = require_field<std::string>(obj, "init.", "b");
  } else {
    fail("\"init.type\" must be \"identity\", \"deterministic\", \"random\", or \"files\"");
  }
  if (spec.type != "files") {
    spec.m = require_field<Eigen::Index>(obj, "init.", "m");
    if (spec.m < 1) fail("\"init.m\" must be positive");
  }
  spec.c1 = get_field<double>(obj, "init.", "c1", 1.0);
  spec.c2 = get_field<double>(obj, "init.", "c2", 1.0);
  spec.c3 = get_field<double>(obj, "init.", "c3", 1.0);
  if (spec.c1 <= 0 || spec.c2 <= 0 || spec.c3 <= 0) {
    fail("\"init.c1\", \"init.c2\", \"init.c3\" must be positive");
  }
  if ((spec.type == "identity" || spec.type == "files") &&
      !(spec.gamma > 0.0 && spec.gamma < 1.0)) {
    fail("\"init.gamma\" must lie in (0, 1)");
  }
  if (spec.beta <= 0.0) fail("\"init.beta\" must be positive");
  return spec;
}

TrainSpec parse_train(const json& obj) {
  if (!obj.is_object()) fail("\"train\" must be an object");
  check_keys(obj, "train.",
             {"eta", "epochs", "monitor_spectral", "monitor_every", "warm_start",
              "forward_tol", "forward_max_iter", "adjoint_tol",
              "adjoint_max_iter"});
  TrainSpec spec;
  spec.eta = get_field<double>(obj, "train.", "eta", spec.eta);
  spec.epochs = get_field<int>(obj, "train.", "epochs", spec.epochs);
  spec.monitor_spectral =
      get_field<bool>(obj, "train.", "monitor_spectral", spec.monitor_spectral);
  spec.monitor_every =
      get_field<int>(obj, "train.", "monitor_every", spec.monitor_every);
  spec.warm_start = get_field<bool>(obj, "train.", "warm_start", false);
  if (obj.contains("forward_tol")) {
    spec.forward_tol = require_field<double>(obj, "train.", "forward_tol");
  }
  if (obj.contains("forward_max_iter")) {
    spec.forward_max_iter = require_field<int>(obj, "train.", "forward_max_iter");
  }
  if (obj.contains("adjoint_tol")) {
    spec.adjoint_tol = require_field<double>(obj, "train.", "adjoint_tol");
  }
  if (obj.contains("adjoint_max_iter")) {
    spec.adjoint_max_iter = require_field<int>(obj, "train.", "adjoint_max_iter");
  }
  if (!(spec.eta > 0.0)) fail("\"train.eta\" must be positive");
  if (spec.epochs < 1) fail("\"train.epochs\" must be >= 1");
  if (spec.monitor_every < 1) fail("\"train.monitor_every\" must be >= 1");
  return spec;
}

SweepSpec parse_sweep(const json& obj) {
  if (!obj.is_object()) fail("\"sweep\" must be an object");
  check_keys(obj, "sweep.", {"gamma", "width", "eta"});
  SweepSpec spec;
  spec.gamma = get_field<std::vector<double>>(obj, "sweep.", "gamma", {});
  spec.eta = get_field<std::vector<double>>(obj, "sweep.", "eta", {});
  spec.width = get_field<std::vector<Eigen::Index>>(obj, "sweep.", "width", {});
  const int axes = int(!spec.gamma.empty()) + int(!spec.width.empty()) +
                   int(!spec.eta.empty());
  if (axes != 1) {
    fail("\"sweep\" must set exactly one nonempty axis (gamma, width, or eta)");
  }
  for (double g : spec.gamma) {
    if (!(g > 0.0 && g < 1.0)) fail("\"sweep.gamma\" entries must lie in (0, 1)");
  }
  for (Eigen::Index m : spec.width) {
    if (m < 1) fail("\"sweep.width\" entries must be positive");
  }
  for (double e : spec.eta) {
    if (!(e > 0.0)) fail("\"sweep.eta\" entries must be positive");
  }
  return spec;
}

GradCheckSpec parse_grad_check(const json& obj) {
  if (!obj.is_object()) fail("\"grad_check\" must be an object");
  check_keys(obj, "grad_check.", {"fd_step", "unroll_steps", "tol", "adjoint_tol"});
  GradCheckSpec spec;
  spec.fd_step = get_field<double>(obj, "grad_check.", "fd_step", spec.fd_step);
  spec.unroll_steps =
      get_field<int>(obj, "grad_check.", "unroll_steps", spec.unroll_steps);
  spec.tol = get_field<double>(obj, "grad_check.", "tol", spec.tol);
  if (obj.contains("adjoint_tol")) {
    spec.adjoint_tol = require_field<double>(obj, "grad_check.", "adjoint_tol");
  }
  if (!(spec.fd_step > 0.0) || !(spec.tol > 0.0) || spec.unroll_steps < 1) {
    fail("\"grad_check\" values must be positive");
  }
  return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("config root must be a JSON object");
  check_keys(doc, "",
             {"seed", "mode", "out", "dataset", "init", "train", "sweep",
              "grad_check"});

  RunConfig cfg;
  cfg.seed = get_field<std::uint64_t>(doc, "", "seed", 0);
  cfg.mode = get_field<std::string>(doc, "", "mode", "strict");
  if (cfg.mode != "strict" && cfg.mode != "experiment") {
    fail("\"mode\" must be \"strict\" or \"experiment\"");
  }
  cfg.out = get_field<std::string>(doc, "", "out", "out");
  if (doc.contains("dataset")) cfg.dataset = parse_dataset(doc.at("dataset"));
  if (doc.contains("init")) cfg.init = parse_init(doc.at("init"));
  if (doc.contains("train")) cfg.train = parse_train(doc.at("train"));
  if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc.at("sweep"));
  if (doc.contains("grad_check")) {
    cfg.grad_check = parse_grad_check(doc.at("grad_check"));
  }
  return cfg;
}

BuiltData build_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  BuiltData built;
  if (spec.type == "synthetic") {
    const LabelMode mode =
        spec.label_mode == "signs" ? LabelMode::kSigns : LabelMode::kTeacher;
    built.train = synthetic(spec.n, spec.d, seed, mode);
    if (spec.test_n > 0) {
      built.test = synthetic(spec.test_n, spec.d, seed + 1, mode);
    }
  } else {
    const RawImages raw = load_idx(spec.images, spec.labels);
    Dataset train = make_binary_subset(raw, spec.classes, spec.per_class, seed);
    if (spec.normalize) train.X = normalize_rows(train.X);
    built.train = std::move(train);
    if (!spec.test_images.empty()) {
      const RawImages raw_test = load_idx(spec.test_images, spec.test_labels);
      const std::size_t n_test =
          spec.test_per_class > 0 ? spec.test_per_class : spec.per_class;
      Dataset test = make_binary_subset(raw_test, spec.classes, n_test, seed + 1);
      if (spec.normalize) test.X = normalize_rows(test.X);
      built.test = std::move(test);
    }
  }
  return built;
}

Matrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(std::uint8_t(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        fail(path + ": cannot parse \"" + cell + "\" as a number");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(path + ": ragged rows (row " + std::to_string(rows.size() + 1) +
           " has " + std::to_string(row.size()) + " columns)");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) fail(path + ": empty matrix");
  Matrix M(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      M(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    }
  }
  return M;
}

Params build_params(const InitSpec& spec, const Dataset& data,
                    std::uint64_t seed) {
  const Matrix& X = data.X;
  if (spec.type == "identity") {
    return identity_init(X.cols(), spec.m, spec.gamma, seed, spec.beta);
  }
  if (spec.type == "deterministic") {
    if (spec.auto_scale) {
      const Params base = deterministic_init(X, spec.m, 1.0, seed);
      return scale_to_satisfy(base, data, spec.c1, spec.c2, spec.c3).params;
    }
    return deterministic_init(X, spec.m, spec.beta, seed);
  }
  if (spec.type == "random") {
    return random_init(X.cols(), spec.m, seed);
  }
  Params p;
  p.W = load_csv_matrix(spec.W);
  p.A = load_csv_matrix(spec.A);
  Matrix b = load_csv_matrix(spec.b);
  if (b.cols() == 1) {
    p.b = b.col(0);
  } else if (b.rows() == 1) {
    p.b = b.row(0).transpose();
  } else {
    fail(spec.b + ": expected a vector (one row or one column)");
  }
  p.gamma = spec.gamma;
  if (p.W.cols() != p.A.rows() || p.A.rows() != p.A.cols() ||
      p.b.size() != p.A.rows()) {
    fail("matrix files disagree on width m");
  }
  return p;
}

TrainConfig build_train_config(const RunConfig& cfg) {
  TrainConfig out;
  out.eta = cfg.train.eta;
  out.epochs = cfg.train.epochs;
  out.monitor_spectral = cfg.train.monitor_spectral;
  out.monitor_every = cfg.train.monitor_every;
  out.warm_start = cfg.train.warm_start;
  out.seed = cfg.seed;
  out.mode = cfg.mode == "strict" ? TrainMode::kStrict : TrainMode::kExperiment;
  const bool experiment = out.mode == TrainMode::kExperiment;
  if (cfg.train.forward_tol || cfg.train.forward_max_iter) {
    SolveOptions opts =
        experiment ? experiment_defaults() : SolveOptions{};
    if (cfg.train.forward_tol) opts.tol = *cfg.train.forward_tol;
    if (cfg.train.forward_max_iter) opts.max_iter = *cfg.train.forward_max_iter;
    opts.strict = !experiment;
    out.forward_opts = opts;
  }
  if (cfg.train.adjoint_tol || cfg.train.adjoint_max_iter) {
    SolveOptions opts =
        experiment ? experiment_defaults() : SolveOptions{};
    if (cfg.train.adjoint_tol) opts.tol = *cfg.train.adjoint_tol;
    if (cfg.train.adjoint_max_iter) opts.max_iter = *cfg.train.adjoint_max_iter;
    opts.strict = false;
    out.adjoint_opts = opts;
  }
  return out;
}

const DatasetSpec& require_dataset(const RunConfig& cfg) {
  if (!cfg.dataset) fail("missing key \"dataset\"");
  return *cfg.dataset;
}

const InitSpec& require_init(const RunConfig& cfg) {
  if (!cfg.init) fail("missing key \"init\"");
  return *cfg.init;
}

}  // namespace ieq::cli
