#pragma once

#include <vector>

#include "msvgd/types.hpp"

namespace msvgd {

// A latent variable model with a fixed dataset y, exposing the joint
// log-density l(theta, x) = log p_theta(x, y) and both of its gradients.
//
// Implementations keep every normalising constant, so log_joint is the exact
// joint log-density.
class LatentVariableModel {
 public:
  virtual ~LatentVariableModel() = default;

  virtual Eigen::Index dim_theta() const = 0;
  virtual Eigen::Index dim_x() const = 0;

  virtual double log_joint(const VectorRef& theta, const VectorRef& x) const = 0;
  virtual Vector grad_theta(const VectorRef& theta, const VectorRef& x) const = 0;
  virtual Vector grad_x(const VectorRef& theta, const VectorRef& x) const = 0;

 protected:
  void check_dims(const VectorRef& theta, const VectorRef& x) const;
};

// Binary classifiers whose latent variable is the weight vector.
class SupervisedModel : public LatentVariableModel {
 public:
  virtual Eigen::Index feature_dim() const = 0;

  // p(label = 1 | row, x) for every row of `features`.
  virtual Vector class_one_probability(const VectorRef& x, const Matrix& features) const = 0;
};

// p_theta(x, y) = prod_i N(y_i; x_i, 1) N(x_i; theta, sigma^2), theta scalar.
class ToyHM final : public LatentVariableModel {
 public:
  ToyHM(Vector y, double sigma);

  Eigen::Index dim_theta() const override { return 1; }
  Eigen::Index dim_x() const override { return y_.size(); }

  double log_joint(const VectorRef& theta, const VectorRef& x) const override;
  Vector grad_theta(const VectorRef& theta, const VectorRef& x) const override;
  Vector grad_x(const VectorRef& theta, const VectorRef& x) const override;

  const Vector& y() const { return y_; }
  double sigma() const { return sigma_; }

 private:
  Vector y_;
  double sigma_;
};

// Maximiser of the ToyHM marginal likelihood: the mean of y.
double toy_hm_empirical_mle(const VectorRef& y);

struct GaussianPosterior {
  Vector mean;
  double variance;
};

// Exact ToyHM posterior p_theta(x | y); coordinates are independent.
GaussianPosterior toy_hm_posterior(double theta, const VectorRef& y, double sigma);

// Logistic regression with prior x ~ N(theta 1, prior_variance I), theta scalar.
class BayesLogReg final : public SupervisedModel {
 public:
  BayesLogReg(Matrix features, std::vector<int> labels, double prior_variance = 5.0);

  Eigen::Index dim_theta() const override { return 1; }
  Eigen::Index dim_x() const override { return features_.cols(); }
  Eigen::Index feature_dim() const override { return features_.cols(); }

  double log_joint(const VectorRef& theta, const VectorRef& x) const override;
  Vector grad_theta(const VectorRef& theta, const VectorRef& x) const override;
  Vector grad_x(const VectorRef& theta, const VectorRef& x) const override;

  Vector class_one_probability(const VectorRef& x, const Matrix& features) const override;

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  double prior_variance() const { return prior_variance_; }

 private:
  Matrix features_;
  std::vector<int> labels_;
  Vector label_values_;
  double prior_variance_;
};

// One-hidden-layer tanh network with a two-class softmax output.
//
// x = (w, v) flattened as w (hidden x inputs, row-major) followed by
// v (2 x hidden, row-major). theta = (alpha, beta) are log standard
// deviations of the Gaussian priors on w and v.
class BinaryBNN final : public SupervisedModel {
 public:
  BinaryBNN(Matrix features, std::vector<int> labels, Eigen::Index hidden = 40);

  Eigen::Index dim_theta() const override { return 2; }
  Eigen::Index dim_x() const override { return hidden_ * (inputs() + 2); }
  Eigen::Index feature_dim() const override { return inputs(); }

  Eigen::Index hidden() const { return hidden_; }
  Eigen::Index inputs() const { return features_.cols(); }
  Eigen::Index num_w() const { return hidden_ * inputs(); }
  Eigen::Index num_v() const { return 2 * hidden_; }

  double log_joint(const VectorRef& theta, const VectorRef& x) const override;
  Vector grad_theta(const VectorRef& theta, const VectorRef& x) const override;
  Vector grad_x(const VectorRef& theta, const VectorRef& x) const override;

  Vector class_one_probability(const VectorRef& x, const Matrix& features) const override;

  // Two-class softmax probabilities, one row per feature row.
  Eigen::MatrixX2d class_probabilities(const VectorRef& x, const Matrix& features) const;

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  Matrix features_;
  std::vector<int> labels_;
  Eigen::Index hidden_;
};

// Bayesian model average over the particle cloud: (1/N) sum_i p(1 | row, x_i).
Vector predict_proba(const SupervisedModel& model, const Particles& cloud, const Matrix& features);

}  // namespace msvgd
