#include <cmath>
#include <numbers>

#include "msvgd/errors.hpp"
#include "msvgd/models.hpp"

namespace msvgd {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(exp(a) + exp(b))
double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct Forward {
  Eigen::MatrixXd hidden;  // tanh activations, rows x hidden
  Eigen::MatrixX2d logits;
};

Forward forward(const Matrix& features, const RowMajorMap& w, const RowMajorMap& v) {
  Forward f;
  f.hidden = (features * w.transpose()).array().tanh().matrix();
  f.logits = f.hidden * v.transpose();
  return f;
}

}  // namespace

BinaryBNN::BinaryBNN(Matrix features, std::vector<int> labels, Eigen::Index hidden)
    : features_(std::move(features)), labels_(std::move(labels)), hidden_(hidden) {
  detail::require(features_.rows() == static_cast<Eigen::Index>(labels_.size()),
                  "feature and label counts differ");
  detail::require(features_.cols() >= 1, "features need at least one column");
  detail::require(hidden_ >= 1, "hidden width must be positive");
  for (int l : labels_) detail::require(l == 0 || l == 1, "labels must be 0 or 1");
}

double BinaryBNN::log_joint(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  const RowMajorMap w(x.data(), hidden_, inputs());
  const RowMajorMap v(x.data() + num_w(), 2, hidden_);
  const Forward f = forward(features_, w, v);

  double data = 0.0;
  for (Eigen::Index r = 0; r < f.logits.rows(); ++r) {
    const int label = labels_[static_cast<std::size_t>(r)];
    data += f.logits(r, label) - log_add_exp(f.logits(r, 0), f.logits(r, 1));
  }

  const double alpha = theta[0];
  const double beta = theta[1];
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const double dw = static_cast<double>(num_w());
  const double dv = static_cast<double>(num_v());
  const double prior_w = -dw * (alpha + half_log_2pi) - 0.5 * std::exp(-2.0 * alpha) * w.squaredNorm();
  const double prior_v = -dv * (beta + half_log_2pi) - 0.5 * std::exp(-2.0 * beta) * v.squaredNorm();
  return data + prior_w + prior_v;
}

Vector BinaryBNN::grad_theta(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  const auto w = x.head(num_w());
  const auto v = x.tail(num_v());
  Vector g(2);
  g[0] = -static_cast<double>(num_w()) + std::exp(-2.0 * theta[0]) * w.squaredNorm();
  g[1] = -static_cast<double>(num_v()) + std::exp(-2.0 * theta[1]) * v.squaredNorm();
  return g;
}

Vector BinaryBNN::grad_x(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  const RowMajorMap w(x.data(), hidden_, inputs());
  const RowMajorMap v(x.data() + num_w(), 2, hidden_);
  const Forward f = forward(features_, w, v);

  // d log-likelihood / d logits: onehot(label) - softmax(logits)
  Eigen::MatrixX2d delta(f.logits.rows(), 2);
  for (Eigen::Index r = 0; r < f.logits.rows(); ++r) {
    const double p1 = sigmoid(f.logits(r, 1) - f.logits(r, 0));
    const double y1 = labels_[static_cast<std::size_t>(r)] == 1 ? 1.0 : 0.0;
    delta(r, 1) = y1 - p1;
    delta(r, 0) = -delta(r, 1);
  }

  const Eigen::MatrixXd grad_v = delta.transpose() * f.hidden;
  const Eigen::MatrixXd pre = ((delta * v).array() * (1.0 - f.hidden.array().square())).matrix();
  const Eigen::MatrixXd grad_w = pre.transpose() * features_;

  Vector g(dim_x());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(g.data(), hidden_, inputs());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gv(g.data() + num_w(), 2,
                                                                                      hidden_);
  gw = grad_w - std::exp(-2.0 * theta[0]) * w;
  gv = grad_v - std::exp(-2.0 * theta[1]) * v;
  return g;
}

Eigen::MatrixX2d BinaryBNN::class_probabilities(const VectorRef& x, const Matrix& features) const {
  detail::require(x.size() == dim_x(), "latent variable has the wrong dimension for this model");
  detail::require(features.cols() == feature_dim(), "feature rows have the wrong dimension");
  const RowMajorMap w(x.data(), hidden_, inputs());
  const RowMajorMap v(x.data() + num_w(), 2, hidden_);
  const Forward f = forward(features, w, v);
  Eigen::MatrixX2d p(f.logits.rows(), 2);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p(r, 1) = sigmoid(f.logits(r, 1) - f.logits(r, 0));
    p(r, 0) = sigmoid(f.logits(r, 0) - f.logits(r, 1));
  }
  return p;
}

Vector BinaryBNN::class_one_probability(const VectorRef& x, const Matrix& features) const {
  return class_probabilities(x, features).col(1);
}

}  // namespace msvgd
