#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "msvgd/types.hpp"

namespace testing {

inline msvgd::Particles gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                        double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  msvgd::Particles m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng);
  return m;
}

inline msvgd::Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  msvgd::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * normal(rng);
  return v;
}

inline std::vector<int> coin_labels(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> labels(n);
  for (auto& l : labels) l = coin(rng) ? 1 : 0;
  return labels;
}

inline double log_normal_pdf(double x, double mean, double variance) {
  const double pi = 3.14159265358979323846;
  return -0.5 * std::log(2.0 * pi * variance) - (x - mean) * (x - mean) / (2.0 * variance);
}

// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("msvgd-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
