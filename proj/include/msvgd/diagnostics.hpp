#pragma once

#include <cstdint>
#include <span>

#include "msvgd/models.hpp"

namespace msvgd {

struct GradientCheck {
  double max_rel_error_theta = 0.0;
  double max_rel_error_x = 0.0;
  std::size_t x_coords_checked = 0;
};

// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1.0);

// Compares the analytic gradients with central differences of log_joint.
// An empty coordinate list checks every latent coordinate.
GradientCheck check_gradients(const LatentVariableModel& model, const VectorRef& theta, const VectorRef& x,
                              std::span<const Eigen::Index> x_coords = {}, double step = 1e-5);

// Largest per-coordinate gap between the exponential-map step and the
// closed-form Wasserstein-Nesterov step over random ToyHM instances.
double ragd_wnes_max_gap(std::size_t instances, std::uint64_t seed);

}  // namespace msvgd
