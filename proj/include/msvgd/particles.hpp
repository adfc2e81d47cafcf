#pragma once

#include <cstdint>
#include <span>

#include "msvgd/kernels.hpp"
#include "msvgd/models.hpp"
#include "msvgd/types.hpp"

namespace msvgd {

// Empirical measure on the latent space together with its Nesterov
// lookahead copy and the previous iterate.
struct ParticleCloud {
  Particles particles;
  Particles momentum_particles;
  Particles prev_particles;

  // A fresh cloud: all three arrays start equal.
  static ParticleCloud from(Particles initial);

  Eigen::Index size() const { return particles.rows(); }
  Eigen::Index dim() const { return particles.cols(); }

  // Throws ContractViolation unless all three arrays share a non-empty shape.
  void validate() const;
};

// A tangent vector at a cloud: one displacement per particle.
struct VelocityField {
  Particles per_particle;
};

// v_i = (1/N) sum_j [ k(x_j, x_i) score_j + grad_1 k(x_j, x_i) ].
VelocityField svgd_velocity(const Particles& points, const Particles& scores, const KernelSpec& kernel,
                            double h);

// Scores grad_x l(theta, x) for every row of `points`.
Particles scores_at(const LatentVariableModel& model, const VectorRef& theta, const Particles& points);

// Particle form of the exponential map: x -> x + v(x).
Particles exp_map_particles(const Particles& points, const VelocityField& velocity);

// Pairwise-closeness approximation of the inverse exponential map: to_i - from_i.
VelocityField inv_exp_approx(const Particles& from_points, const Particles& to_points);

// Riemannian accelerated step written with exponential maps and their
// approximate inverses. Kept as an executable derivation of wnes_particle_step.
ParticleCloud ragd_particle_step(const ParticleCloud& cloud, const VectorRef& theta,
                                 const LatentVariableModel& model, const KernelSpec& kernel, double gamma,
                                 double c1, double c2);

// Wasserstein-Nesterov SVGD step: SVGD move from the momentum particles, then
// x~_{t+1} = x_{t+1} + alpha_x (x_{t+1} - x_t).
ParticleCloud wnes_particle_step(const ParticleCloud& cloud, const VectorRef& theta,
                                 const LatentVariableModel& model, const KernelSpec& kernel, double gamma,
                                 double alpha_x);

// Source of standard normal draws for Langevin moves.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  // Fills `out` with the draws for (iteration, particle).
  virtual void fill(std::uint64_t iteration, std::uint64_t particle, std::span<double> out) const = 0;
};

// Counter-based stream: draws depend only on (seed, iteration, particle).
class GaussianNoise final : public NoiseSource {
 public:
  explicit GaussianNoise(std::uint64_t seed) : seed_(seed) {}
  void fill(std::uint64_t iteration, std::uint64_t particle, std::span<double> out) const override;

 private:
  std::uint64_t seed_;
};

class ZeroNoise final : public NoiseSource {
 public:
  void fill(std::uint64_t, std::uint64_t, std::span<double> out) const override;
};

// Unadjusted Langevin move, independent per particle:
// x + gamma grad_x l(theta, x) + sqrt(2 gamma) xi.
ParticleCloud langevin_step(const ParticleCloud& cloud, const VectorRef& theta, const LatentVariableModel& model,
                            double gamma, const NoiseSource& noise, std::uint64_t iteration);

}  // namespace msvgd
