#include "msvgd/errors.hpp"
#include "msvgd/models.hpp"

namespace msvgd {

void LatentVariableModel::check_dims(const VectorRef& theta, const VectorRef& x) const {
  detail::require(theta.size() == dim_theta(), "theta has the wrong dimension for this model");
  detail::require(x.size() == dim_x(), "latent variable has the wrong dimension for this model");
}

Vector predict_proba(const SupervisedModel& model, const Particles& cloud, const Matrix& features) {
  detail::require(cloud.rows() >= 1, "predict_proba needs at least one particle");
  detail::require(cloud.cols() == model.dim_x(), "particles have the wrong dimension for this model");
  detail::require(features.cols() == model.feature_dim(), "feature rows have the wrong dimension");
  Vector total = Vector::Zero(features.rows());
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    total += model.class_one_probability(cloud.row(i).transpose(), features);
  }
  return total / static_cast<double>(cloud.rows());
}

}  // namespace msvgd
