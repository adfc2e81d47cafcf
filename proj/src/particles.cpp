#include "msvgd/particles.hpp"

#include <cmath>
#include <random>

#include "msvgd/errors.hpp"

namespace msvgd {

namespace {

void require_same_shape(const Particles& a, const Particles& b, const char* message) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), message);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

ParticleCloud ParticleCloud::from(Particles initial) {
  detail::require(initial.rows() >= 1 && initial.cols() >= 1, "a particle cloud needs at least one particle");
  ParticleCloud cloud;
  cloud.momentum_particles = initial;
  cloud.prev_particles = initial;
  cloud.particles = std::move(initial);
  return cloud;
}

void ParticleCloud::validate() const {
  detail::require(particles.rows() >= 1 && particles.cols() >= 1, "a particle cloud needs at least one particle");
  require_same_shape(particles, momentum_particles, "momentum particles differ in shape from particles");
  require_same_shape(particles, prev_particles, "previous particles differ in shape from particles");
}

VelocityField svgd_velocity(const Particles& points, const Particles& scores, const KernelSpec& kernel,
                            double h) {
  require_same_shape(points, scores, "points and scores differ in shape");
  detail::require(points.rows() >= 1, "svgd_velocity needs at least one particle");
  detail::require(h > 0.0, "kernel bandwidth must be positive");
  const Eigen::Index n = points.rows();
  const double grad_factor = rbf_grad_factor(kernel.variant, h);

  VelocityField v{Particles::Zero(n, points.cols())};
  Eigen::RowVectorXd diff(points.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto acc = v.per_particle.row(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      diff = points.row(j) - points.row(i);
      const double k = rbf_from_sq_dist(kernel.variant, h, diff.squaredNorm());
      // k(x_j, x_i) score_j + grad_1 k(x_j, x_i)
      acc += k * scores.row(j) + (grad_factor * k) * diff;
    }
    acc /= static_cast<double>(n);
  }
  return v;
}

Particles scores_at(const LatentVariableModel& model, const VectorRef& theta, const Particles& points) {
  detail::require(points.cols() == model.dim_x(), "particles have the wrong dimension for this model");
  Particles scores(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    scores.row(i) = model.grad_x(theta, points.row(i).transpose()).transpose();
  }
  return scores;
}

Particles exp_map_particles(const Particles& points, const VelocityField& velocity) {
  require_same_shape(points, velocity.per_particle, "points and velocity field differ in shape");
  return points + velocity.per_particle;
}

VelocityField inv_exp_approx(const Particles& from_points, const Particles& to_points) {
  require_same_shape(from_points, to_points, "clouds differ in shape");
  return {to_points - from_points};
}

ParticleCloud ragd_particle_step(const ParticleCloud& cloud, const VectorRef& theta,
                                 const LatentVariableModel& model, const KernelSpec& kernel, double gamma,
                                 double c1, double c2) {
  cloud.validate();
  detail::require(c1 >= 0.0 && c2 >= 0.0, "RAGD constants must be non-negative");
  const Particles& x_prev = cloud.particles;
  const Particles& lookahead = cloud.momentum_particles;

  // q_{t+1} = Exp_{q~_t}(-gamma grad_{H_k} F(theta, q~_t))
  const double h = resolve_bandwidth(kernel, lookahead);
  VelocityField descent = svgd_velocity(lookahead, scores_at(model, theta, lookahead), kernel, h);
  descent.per_particle *= gamma;
  Particles x_next = exp_map_particles(lookahead, descent);

  // Exp_{q~_t}( Exp^-1_{q~_t}(q_{t+1}) + (c2 - 1)(Exp^-1_{q~_t}(q_{t+1}) - Exp^-1_{q~_t}(q_t)) )
  const VelocityField to_next = inv_exp_approx(lookahead, x_next);
  const VelocityField to_prev = inv_exp_approx(lookahead, x_prev);
  const VelocityField inner{to_next.per_particle + (c2 - 1.0) * (to_next.per_particle - to_prev.per_particle)};
  const Particles extrapolated = exp_map_particles(lookahead, inner);

  // q~_{t+1} = Exp_{q_{t+1}}( c1 Exp^-1_{q_{t+1}}(extrapolated) )
  VelocityField outer = inv_exp_approx(x_next, extrapolated);
  outer.per_particle *= c1;
  Particles next_lookahead = exp_map_particles(x_next, outer);

  ParticleCloud next;
  next.prev_particles = x_prev;
  next.particles = std::move(x_next);
  next.momentum_particles = std::move(next_lookahead);
  return next;
}

ParticleCloud wnes_particle_step(const ParticleCloud& cloud, const VectorRef& theta,
                                 const LatentVariableModel& model, const KernelSpec& kernel, double gamma,
                                 double alpha_x) {
  cloud.validate();
  const Particles& lookahead = cloud.momentum_particles;
  const double h = resolve_bandwidth(kernel, lookahead);
  const VelocityField v = svgd_velocity(lookahead, scores_at(model, theta, lookahead), kernel, h);

  ParticleCloud next;
  next.particles = lookahead + gamma * v.per_particle;
  next.momentum_particles = next.particles + alpha_x * (next.particles - cloud.particles);
  next.prev_particles = cloud.particles;
  return next;
}

void GaussianNoise::fill(std::uint64_t iteration, std::uint64_t particle, std::span<double> out) const {
  const std::uint64_t key = splitmix64(seed_ ^ splitmix64(iteration ^ splitmix64(particle + 0x51ed27ULL)));
  std::mt19937_64 engine(key);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& z : out) z = normal(engine);
}

void ZeroNoise::fill(std::uint64_t, std::uint64_t, std::span<double> out) const {
  for (double& z : out) z = 0.0;
}

ParticleCloud langevin_step(const ParticleCloud& cloud, const VectorRef& theta, const LatentVariableModel& model,
                            double gamma, const NoiseSource& noise, std::uint64_t iteration) {
  cloud.validate();
  detail::require(gamma > 0.0, "Langevin step size must be positive");
  const double noise_scale = std::sqrt(2.0 * gamma);
  const Particles scores = scores_at(model, theta, cloud.particles);

  ParticleCloud next;
  next.prev_particles = cloud.particles;
  next.particles.resize(cloud.size(), cloud.dim());
  Eigen::RowVectorXd xi(cloud.dim());
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    noise.fill(iteration, static_cast<std::uint64_t>(i), std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
    next.particles.row(i) = cloud.particles.row(i) + gamma * scores.row(i) + noise_scale * xi;
  }
  next.momentum_particles = next.particles;
  return next;
}

}  // namespace msvgd
