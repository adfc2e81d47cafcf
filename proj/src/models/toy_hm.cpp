#include <cmath>
#include <numbers>

#include "msvgd/errors.hpp"
#include "msvgd/models.hpp"

namespace msvgd {

ToyHM::ToyHM(Vector y, double sigma) : y_(std::move(y)), sigma_(sigma) {
  detail::require(y_.size() >= 1, "ToyHM needs at least one observation");
  detail::require(sigma_ > 0.0, "ToyHM sigma must be positive");
}

double ToyHM::log_joint(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  const double s2 = sigma_ * sigma_;
  const double n = static_cast<double>(y_.size());
  const double log_norm = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(2.0 * std::numbers::pi * s2);
  return log_norm - 0.5 * (y_ - x).squaredNorm() - 0.5 * (x.array() - theta[0]).square().sum() / s2;
}

Vector ToyHM::grad_theta(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  Vector g(1);
  g[0] = (x.array() - theta[0]).sum() / (sigma_ * sigma_);
  return g;
}

Vector ToyHM::grad_x(const VectorRef& theta, const VectorRef& x) const {
  check_dims(theta, x);
  return (y_ - x).array() - (x.array() - theta[0]) / (sigma_ * sigma_);
}

double toy_hm_empirical_mle(const VectorRef& y) {
  detail::require(y.size() >= 1, "empirical MLE needs at least one observation");
  return y.mean();
}

GaussianPosterior toy_hm_posterior(double theta, const VectorRef& y, double sigma) {
  detail::require(sigma > 0.0, "ToyHM sigma must be positive");
  const double s2 = sigma * sigma;
  Vector mean = (s2 * y.array() + theta) / (1.0 + s2);
  return {std::move(mean), s2 / (1.0 + s2)};
}

}  // namespace msvgd
