#include "msvgd/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "msvgd/errors.hpp"

namespace msvgd {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr int kWisconsinFeatures = 30;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_double(const std::string& text, std::size_t line) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError("non-numeric feature '" + t + "'", line);
  }
  return value;
}

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("truncated IDX header in " + path.string());
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), 4);
}

LabeledData take_rows(const LabeledData& data, const std::vector<std::size_t>& rows) {
  LabeledData out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = data.features.row(static_cast<Eigen::Index>(rows[r]));
    out.labels.push_back(data.labels[rows[r]]);
  }
  return out;
}

}  // namespace

LabeledData load_wisconsin(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::array<double, kWisconsinFeatures>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2 + kWisconsinFeatures) {
      throw ParseError("expected 32 fields, found " + std::to_string(fields.size()), line_no);
    }
    const std::string diagnosis = trim(fields[1]);
    if (diagnosis == "M") {
      labels.push_back(1);
    } else if (diagnosis == "B") {
      labels.push_back(0);
    } else {
      throw ParseError("diagnosis must be M or B, found '" + diagnosis + "'", line_no);
    }
    std::array<double, kWisconsinFeatures> values{};
    for (int c = 0; c < kWisconsinFeatures; ++c) values[c] = parse_double(fields[2 + c], line_no);
    rows.push_back(values);
  }

  LabeledData data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), kWisconsinFeatures);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < kWisconsinFeatures; ++c) data.features(static_cast<Eigen::Index>(r), c) = rows[r][c];
  }
  data.labels = std::move(labels);
  return data;
}

void write_wisconsin(const std::filesystem::path& path, const LabeledData& data) {
  detail::require(data.features.cols() == kWisconsinFeatures, "WDBC rows carry 30 features");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    out << (r + 1) << ',' << (data.labels[static_cast<std::size_t>(r)] == 1 ? 'M' : 'B');
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) out << ',' << data.features(r, c);
    out << '\n';
  }
}

LabeledData load_mnist_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                            std::pair<int, int> digits, std::size_t count) {
  std::ifstream img = open_input(images);
  std::ifstream lab = open_input(labels);
  const std::uint32_t img_magic = read_be32(img, images);
  if (img_magic != kIdxImagesMagic) throw FormatError("bad IDX image magic number in " + images.string());
  const std::uint32_t lab_magic = read_be32(lab, labels);
  if (lab_magic != kIdxLabelsMagic) throw FormatError("bad IDX label magic number in " + labels.string());

  const std::uint32_t n_images = read_be32(img, images);
  const std::uint32_t n_rows = read_be32(img, images);
  const std::uint32_t n_cols = read_be32(img, images);
  const std::uint32_t n_labels = read_be32(lab, labels);
  if (n_images != n_labels) throw FormatError("image and label files disagree on the example count");

  const std::size_t pixels = std::size_t{n_rows} * n_cols;
  std::vector<unsigned char> all_labels(n_labels);
  if (!lab.read(reinterpret_cast<char*>(all_labels.data()), static_cast<std::streamsize>(n_labels))) {
    throw FormatError("truncated IDX label data in " + labels.string());
  }

  LabeledData data;
  data.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  data.labels.reserve(count);
  std::vector<unsigned char> buffer(pixels);
  for (std::uint32_t i = 0; i < n_images && data.labels.size() < count; ++i) {
    if (!img.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(pixels))) {
      throw FormatError("truncated IDX image data in " + images.string());
    }
    const int digit = all_labels[i];
    if (digit != digits.first && digit != digits.second) continue;
    const auto r = static_cast<Eigen::Index>(data.labels.size());
    for (std::size_t p = 0; p < pixels; ++p) data.features(r, static_cast<Eigen::Index>(p)) = buffer[p];
    data.labels.push_back(digit == digits.second ? 1 : 0);
  }
  if (data.labels.size() < count) {
    throw InsufficientData("only " + std::to_string(data.labels.size()) + " examples of digits " +
                           std::to_string(digits.first) + "/" + std::to_string(digits.second) + ", " +
                           std::to_string(count) + " requested");
  }
  return data;
}

void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  detail::require(pixels.size() == std::size_t{count} * rows * cols, "pixel buffer does not match the shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_be32(out, kIdxImagesMagic);
  write_be32(out, count);
  write_be32(out, rows);
  write_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

TrainTestSplit train_test_split(const LabeledData& data, double train_fraction, std::uint64_t seed) {
  detail::require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(data.features.rows());
  detail::require(n >= 2, "splitting needs at least two rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 engine(seed);
  // Fisher-Yates with an explicit index draw keeps the permutation identical across standard libraries.
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[engine() % (i + 1)]);

  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {take_rows(data, train), take_rows(data, test)};
}

Standardizer Standardizer::fit(const Matrix& features) {
  detail::require(features.rows() >= 1, "cannot standardise an empty matrix");
  Standardizer s;
  s.mean = features.colwise().mean();
  const Matrix centered = features.rowwise() - s.mean;
  s.scale = (centered.array().square().colwise().sum() / static_cast<double>(features.rows())).sqrt();
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  detail::require(features.cols() == mean.size(), "feature width differs from the fitted standardiser");
  Matrix out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    if (scale[c] > 1e-12 * std::max(1.0, std::abs(mean[c]))) {
      out.col(c) = (features.col(c).array() - mean[c]) / scale[c];
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

}  // namespace msvgd
