#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msvgd/kernels.hpp"
#include "msvgd/models.hpp"
#include "msvgd/particles.hpp"

namespace msvgd {

enum class Method {
  SvgdEm,
  MSvgdEm,
  MSvgdEmAdagrad,
  Pgd,
  // Externally supplied step function (e.g. MPGD or SOUL baselines).
  Custom,
};

// Where the AdaGrad stability constant enters the step denominator.
enum class EpsilonPlacement {
  // sqrt(G + eps) for theta, sqrt(G) + eps for particles.
  AsPrinted,
  InsideSqrt,
  OutsideSqrt,
};

struct AlgorithmState {
  Vector theta;
  Vector theta_tilde;
  Vector prev_theta;
  ParticleCloud cloud;
  std::optional<Vector> adagrad_theta;
  std::optional<Particles> adagrad_x;
  std::size_t iteration = 0;

  static AlgorithmState initial(Vector theta0, Particles particles0);
};

struct AlgorithmConfig;

using StepFunction = std::function<AlgorithmState(const AlgorithmState&, const LatentVariableModel&,
                                                  const KernelSpec&, const AlgorithmConfig&)>;

struct AlgorithmConfig {
  Method method = Method::MSvgdEm;
  double gamma = 0.3;
  double alpha_theta = 0.0;
  double alpha_x = 0.0;
  double adagrad_epsilon = 1e-8;
  EpsilonPlacement epsilon_placement = EpsilonPlacement::AsPrinted;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  StepFunction custom_step;
};

std::string to_string(Method method);
Method method_from_string(const std::string& name);

// theta_{t+1} = theta_t + gamma mean_j grad_theta l(theta_t, x_j), then an SVGD
// particle move at theta_{t+1}.
AlgorithmState svgd_em_step(const AlgorithmState& state, const LatentVariableModel& model,
                            const KernelSpec& kernel, double gamma);

// One outer iteration of momentum SVGD-EM: Nesterov on theta, Wasserstein
// Nesterov on the particles.
AlgorithmState msvgd_em_step(const AlgorithmState& state, const LatentVariableModel& model,
                             const KernelSpec& kernel, double gamma, double alpha_theta, double alpha_x);

// Momentum SVGD-EM with AdaGrad-scaled steps for both theta and particles.
AlgorithmState msvgd_em_adagrad_step(const AlgorithmState& state, const LatentVariableModel& model,
                                     const KernelSpec& kernel, double alpha_theta, double alpha_x, double eta,
                                     double epsilon, EpsilonPlacement placement = EpsilonPlacement::AsPrinted);

// Particle gradient descent: plain theta step, independent Langevin particle moves.
AlgorithmState pgd_step(const AlgorithmState& state, const LatentVariableModel& model, double gamma,
                        const NoiseSource& noise);

// Dispatches one iteration according to `config.method`.
AlgorithmState step(const AlgorithmState& state, const LatentVariableModel& model, const KernelSpec& kernel,
                    const AlgorithmConfig& config, const NoiseSource& noise);

using MetricSeries = std::map<std::string, std::vector<double>>;

// Called on the initial state and after every `metric_every` iterations.
using MetricHook = std::function<void(const AlgorithmState&, MetricSeries&)>;

struct RunOptions {
  std::size_t metric_every = 1;
  MetricHook metrics;
};

struct RunRecord {
  AlgorithmConfig config;
  std::vector<Vector> theta_trajectory;  // T + 1 entries
  ParticleCloud final_cloud;
  MetricSeries metrics;
  std::size_t metric_every = 1;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
};

// Runs `config.iterations` outer iterations. Throws DivergedError on the first
// non-finite parameter or particle.
RunRecord run(const AlgorithmConfig& config, const LatentVariableModel& model, const KernelSpec& kernel,
              const Vector& theta0, const ParticleCloud& cloud0, const RunOptions& options = {});

}  // namespace msvgd
