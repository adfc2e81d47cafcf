#include <cmath>
#include <numbers>

#include "msvgd/errors.hpp"
#include "msvgd/models.hpp"

namespace msvgd {

namespace {

// log s(z), stable for large |z|.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

BayesLogReg::BayesLogReg(Matrix features, std::vector<int> labels, double prior_variance)
    : features_(std::move(features)), labels_(std::move(labels)), prior_variance_(prior_variance) {
  detail::require(features_.rows() == static_cast<Eigen::Index>(labels_.size()),
                  "feature and label counts differ");
  detail::require(features_.cols() >= 1, "features need at least one column");
  detail::require(prior_variance_ > 0.0, "prior variance must be positive");
  label_values_.resize(features_.rows());
  for (std::size_t r = 0; r < labels_.size(); ++r) {
    detail::require(labels_[r] == 0 || labels_[r] == 1, "labels must be 0 or 1");
    label_values_[static_cast<Eigen::Index>(r)] = labels_[r];
  }
}

double BayesLogReg::log_joint(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  const Vector logits = features_ * x;
  double data = 0.0;
  for (Eigen::Index r = 0; r < logits.size(); ++r) {
    // log(1 - s(z)) = log s(-z)
    data += labels_[static_cast<std::size_t>(r)] == 1 ? log_sigmoid(logits[r]) : log_sigmoid(-logits[r]);
  }
  const double d = static_cast<double>(x.size());
  const double prior = -0.5 * (x.array() - theta[0]).square().sum() / prior_variance_ -
                       0.5 * d * std::log(2.0 * std::numbers::pi * prior_variance_);
  return data + prior;
}

Vector BayesLogReg::grad_theta(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  Vector g(1);
  g[0] = (x.array() - theta[0]).sum() / prior_variance_;
  return g;
}

Vector BayesLogReg::grad_x(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  Vector residual = features_ * x;
  for (Eigen::Index r = 0; r < residual.size(); ++r) residual[r] = label_values_[r] - sigmoid(residual[r]);
  return features_.transpose() * residual - ((x.array() - theta[0]) / prior_variance_).matrix();
}

Vector BayesLogReg::class_one_probability(const VectorRef& x, const Matrix& features) const {
  detail::require(x.size() == dim_x(), "latent variable has the wrong dimension for this model");
  detail::require(features.cols() == feature_dim(), "feature rows have the wrong dimension");
  Vector p = features * x;
  for (Eigen::Index r = 0; r < p.size(); ++r) p[r] = sigmoid(p[r]);
  return p;
}

}  // namespace msvgd
