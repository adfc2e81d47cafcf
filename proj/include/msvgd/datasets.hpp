#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "msvgd/types.hpp"

namespace msvgd {

struct LabeledData {
  Matrix features;
  std::vector<int> labels;

  Eigen::Index rows() const { return features.rows(); }
};

// UCI WDBC layout: id, diagnosis (M/B), 30 real features. M -> 1, B -> 0.
// Features are returned unscaled.
LabeledData load_wisconsin(const std::filesystem::path& path);
void write_wisconsin(const std::filesystem::path& path, const LabeledData& data);

// First `count` images whose label is one of `digits`; digits.second -> 1,
// digits.first -> 0. Pixels are returned as raw byte values.
LabeledData load_mnist_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                            std::pair<int, int> digits, std::size_t count);

// Raw IDX writers (magic 0x00000803 for images, 0x00000801 for labels).
void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

struct TrainTestSplit {
  LabeledData train;
  LabeledData test;
};

// Uniform (unstratified) random split; the train part gets
// round(train_fraction * n) rows.
TrainTestSplit train_test_split(const LabeledData& data, double train_fraction, std::uint64_t seed);

// Per-column standardisation fitted on one matrix and applied to others.
// Zero-variance columns map to 0.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 0 marks a constant column

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

}  // namespace msvgd
