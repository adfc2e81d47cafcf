#pragma once

#include <Eigen/Dense>

namespace msvgd {

using Vector = Eigen::VectorXd;

// One particle per row so that each particle is contiguous in memory.
using Particles = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Feature matrices: one observation per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

}  // namespace msvgd
