#include "ieq/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ieq/errors.hpp"

namespace ieq {

namespace {

struct IdxHeader {
  std::uint8_t type_code = 0;
  std::uint8_t ndim = 0;
  std::vector<std::uint32_t> dims;
};

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw TruncatedFileError(path + ": truncated header");
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

IdxHeader read_idx_header(std::istream& in, const std::string& path) {
  const std::uint32_t magic = read_u32_be(in, path);
  if ((magic >> 16) != 0) {
    std::ostringstream msg;
    msg << path << ": bad magic 0x" << std::hex << magic;
    throw BadMagicError(msg.str());
  }
  IdxHeader header;
  header.type_code = std::uint8_t((magic >> 8) & 0xFF);
  header.ndim = std::uint8_t(magic & 0xFF);
  if (header.type_code != 0x08) {
    std::ostringstream msg;
    msg << path << ": unsupported type code 0x" << std::hex
        << int(header.type_code) << " (only unsigned bytes are supported)";
    throw UnsupportedTypeCodeError(msg.str());
  }
  header.dims.reserve(header.ndim);
  for (std::uint8_t i = 0; i < header.ndim; ++i) {
    header.dims.push_back(read_u32_be(in, path));
  }
  return header;
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::size_t n,
                                       const std::string& path) {
  std::vector<std::uint8_t> data(n);
  in.read(reinterpret_cast<char*>(data.data()), std::streamsize(n));
  if (std::size_t(in.gcount()) != n) {
    throw TruncatedFileError(path + ": truncated payload");
  }
  return data;
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

}  // namespace

RawImages load_idx_images(const std::string& path) {
  std::ifstream in = open_binary(path);
  const IdxHeader header = read_idx_header(in, path);
  if (header.ndim != 3) {
    std::ostringstream msg;
    msg << path << ": expected 3-D image file, magic declares " << int(header.ndim)
        << " dimensions";
    throw BadMagicError(msg.str());
  }
  RawImages raw;
  raw.count = header.dims[0];
  raw.rows = header.dims[1];
  raw.cols = header.dims[2];
  raw.pixels = read_payload(in, raw.count * raw.rows * raw.cols, path);
  return raw;
}

std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
  std::ifstream in = open_binary(path);
  const IdxHeader header = read_idx_header(in, path);
  if (header.ndim != 1) {
    std::ostringstream msg;
    msg << path << ": expected 1-D label file, magic declares "
        << int(header.ndim) << " dimensions";
    throw BadMagicError(msg.str());
  }
  return read_payload(in, header.dims[0], path);
}

RawImages load_idx(const std::string& images_path,
                   const std::string& labels_path) {
  RawImages raw = load_idx_images(images_path);
  raw.labels = load_idx_labels(labels_path);
  if (raw.labels.size() != raw.count) {
    std::ostringstream msg;
    msg << images_path << " has " << raw.count << " images but " << labels_path
        << " has " << raw.labels.size() << " labels";
    throw ShapeError(msg.str());
  }
  return raw;
}

Dataset make_binary_subset(const RawImages& raw,
                           std::pair<std::uint8_t, std::uint8_t> classes,
                           std::size_t n_per_class, std::uint64_t seed) {
  if (raw.labels.size() != raw.count) {
    throw ShapeError("make_binary_subset: images carry no matching labels");
  }
  std::vector<std::size_t> first, second;
  for (std::size_t i = 0; i < raw.count; ++i) {
    if (raw.labels[i] == classes.first) first.push_back(i);
    if (raw.labels[i] == classes.second) second.push_back(i);
  }
  if (first.size() < n_per_class || second.size() < n_per_class) {
    std::ostringstream msg;
    msg << "make_binary_subset: need " << n_per_class
        << " samples per class, found " << first.size() << " of class "
        << int(classes.first) << " and " << second.size() << " of class "
        << int(classes.second);
    throw InsufficientClassSamplesError(msg.str());
  }

  std::mt19937_64 gen(seed);
  std::shuffle(first.begin(), first.end(), gen);
  std::shuffle(second.begin(), second.end(), gen);
  first.resize(n_per_class);
  second.resize(n_per_class);

  const std::size_t N = 2 * n_per_class;
  const std::size_t d = raw.rows * raw.cols;
  std::vector<std::pair<std::size_t, double>> picked;
  picked.reserve(N);
  for (std::size_t i : first) picked.emplace_back(i, 0.0);
  for (std::size_t i : second) picked.emplace_back(i, 1.0);
  std::shuffle(picked.begin(), picked.end(), gen);

  Dataset data;
  data.X.resize(Eigen::Index(N), Eigen::Index(d));
  data.y.resize(Eigen::Index(N));
  for (std::size_t row = 0; row < N; ++row) {
    const std::uint8_t* src = raw.pixels.data() + picked[row].first * d;
    for (std::size_t col = 0; col < d; ++col) {
      data.X(Eigen::Index(row), Eigen::Index(col)) = double(src[col]) / 255.0;
    }
    data.y(Eigen::Index(row)) = picked[row].second;
  }
  return data;
}

Matrix normalize_rows(const Matrix& X) {
  Matrix out = X;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm == 0.0) {
      std::ostringstream msg;
      msg << "normalize_rows: row " << i << " is all zeros";
      throw ZeroRowError(msg.str());
    }
    out.row(i) /= norm;
  }
  return out;
}

Dataset synthetic(Eigen::Index N, Eigen::Index d, std::uint64_t seed,
                  LabelMode mode) {
  if (N < 1 || d < 1) throw ShapeError("synthetic: N and d must be positive");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix X(N, d);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = nd(gen);
  }
  Dataset data;
  data.X = normalize_rows(X);
  data.y.resize(N);
  if (mode == LabelMode::kSigns) {
    for (Eigen::Index i = 0; i < N; ++i) data.y(i) = i % 2 == 0 ? 1.0 : -1.0;
  } else {
    Vector teacher(d);
    for (Eigen::Index j = 0; j < d; ++j) teacher(j) = nd(gen);
    for (Eigen::Index i = 0; i < N; ++i) {
      data.y(i) = data.X.row(i).dot(teacher) >= 0.0 ? 1.0 : -1.0;
    }
  }
  return data;
}

}  // namespace ieq
