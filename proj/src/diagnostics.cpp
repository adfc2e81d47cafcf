#include "msvgd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "msvgd/particles.hpp"

namespace msvgd {

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

GradientCheck check_gradients(const LatentVariableModel& model, const VectorRef& theta, const VectorRef& x,
                              std::span<const Eigen::Index> x_coords, double step) {
  GradientCheck result;
  const Vector g_theta = model.grad_theta(theta, x);
  Vector t = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    t[k] = theta[k] + step;
    const double up = model.log_joint(t, x);
    t[k] = theta[k] - step;
    const double down = model.log_joint(t, x);
    t[k] = theta[k];
    result.max_rel_error_theta =
        std::max(result.max_rel_error_theta, relative_error(g_theta[k], (up - down) / (2.0 * step)));
  }

  const Vector g_x = model.grad_x(theta, x);
  Vector y = x;
  const auto check_coord = [&](Eigen::Index k) {
    y[k] = x[k] + step;
    const double up = model.log_joint(theta, y);
    y[k] = x[k] - step;
    const double down = model.log_joint(theta, y);
    y[k] = x[k];
    result.max_rel_error_x = std::max(result.max_rel_error_x, relative_error(g_x[k], (up - down) / (2.0 * step)));
    ++result.x_coords_checked;
  };
  if (x_coords.empty()) {
    for (Eigen::Index k = 0; k < x.size(); ++k) check_coord(k);
  } else {
    for (Eigen::Index k : x_coords) check_coord(k);
  }
  return result;
}

double ragd_wnes_max_gap(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_dist(1, 10);
  std::uniform_int_distribution<int> d_dist(1, 20);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto normal_matrix = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Particles m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng);
    return m;
  };

  double gap = 0.0;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const int n = n_dist(rng);
    const int d = d_dist(rng);
    Vector y(d);
    for (int i = 0; i < d; ++i) y[i] = 5.0 * normal(rng);
    const ToyHM model(y, 0.5 + 12.0 * unit(rng));
    Vector theta(1);
    theta[0] = 4.0 * normal(rng);

    ParticleCloud cloud;
    cloud.particles = normal_matrix(n, d, 1.0);
    cloud.momentum_particles = cloud.particles + normal_matrix(n, d, 0.1);
    cloud.prev_particles = cloud.particles + normal_matrix(n, d, 0.1);
    const KernelSpec kernel = inst % 2 == 0 ? KernelSpec::auto_rbf(0.5 + 5.0 * unit(rng))
                                            : KernelSpec::median_rbf(1e-3);
    const double gamma = 0.5 * unit(rng);
    const double c1 = 2.0 * unit(rng);
    const double c2 = 2.0 * unit(rng);

    const ParticleCloud a = ragd_particle_step(cloud, theta, model, kernel, gamma, c1, c2);
    const ParticleCloud b = wnes_particle_step(cloud, theta, model, kernel, gamma, c1 * (c2 - 1.0));
    gap = std::max(gap, (a.particles - b.particles).cwiseAbs().maxCoeff());
    gap = std::max(gap, (a.momentum_particles - b.momentum_particles).cwiseAbs().maxCoeff());
  }
  return gap;
}

}  // namespace msvgd
