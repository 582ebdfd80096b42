#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ieq/types.hpp"

namespace ieq {

struct RawImages {
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;  // count entries
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// IDX readers: big-endian, magic 0x00000803 (3-D ubyte images) and
// 0x00000801 (1-D ubyte labels).
RawImages load_idx_images(const std::string& path);
std::vector<std::uint8_t> load_idx_labels(const std::string& path);

// Convenience: image file + label file with matching counts.
RawImages load_idx(const std::string& images_path, const std::string& labels_path);

// Samples n_per_class indices per class without replacement (seeded), flattens
// images to d = rows*cols doubles in [0,1], assigns targets 0.0 / 1.0 in class
// order, then shuffles rows (seeded).
Dataset make_binary_subset(const RawImages& raw,
                           std::pair<std::uint8_t, std::uint8_t> classes,
                           std::size_t n_per_class, std::uint64_t seed);

// Each row scaled to unit Euclidean norm; all-zero rows are an error.
Matrix normalize_rows(const Matrix& X);

enum class LabelMode { kSigns, kTeacher };

// Unit-norm Gaussian rows; labels alternate +1/-1 (signs) or come from a
// fixed random linear teacher passed through sign (teacher).
Dataset synthetic(Eigen::Index N, Eigen::Index d, std::uint64_t seed,
                  LabelMode mode = LabelMode::kSigns);

}  // namespace ieq
