#include "msvgd/algorithms.hpp"

#include <chrono>
#include <cmath>

#include "msvgd/errors.hpp"

namespace msvgd {

namespace {

// (1/N) sum_j grad_theta l(theta, x_j)
Vector mean_grad_theta(const LatentVariableModel& model, const VectorRef& theta, const Particles& points) {
  Vector sum = Vector::Zero(model.dim_theta());
  for (Eigen::Index j = 0; j < points.rows(); ++j) sum += model.grad_theta(theta, points.row(j).transpose());
  return sum / static_cast<double>(points.rows());
}

VelocityField velocity_at(const LatentVariableModel& model, const KernelSpec& kernel, const VectorRef& theta,
                          const Particles& points) {
  const double h = resolve_bandwidth(kernel, points);
  return svgd_velocity(points, scores_at(model, theta, points), kernel, h);
}

void check_state(const AlgorithmState& state, const LatentVariableModel& model) {
  detail::require(state.theta.size() == model.dim_theta(), "theta has the wrong dimension for this model");
  detail::require(state.theta_tilde.size() == state.theta.size() && state.prev_theta.size() == state.theta.size(),
                  "momentum parameters differ in dimension from theta");
  state.cloud.validate();
  detail::require(state.cloud.dim() == model.dim_x(), "particles have the wrong dimension for this model");
}

template <typename Derived>
typename Derived::PlainObject adagrad_denominator(const Eigen::MatrixBase<Derived>& acc, double epsilon,
                                                  bool inside_sqrt) {
  if (inside_sqrt) return (acc.array() + epsilon).sqrt().matrix();
  return (acc.array().sqrt() + epsilon).matrix();
}

bool all_finite(const AlgorithmState& s) {
  return s.theta.allFinite() && s.theta_tilde.allFinite() && s.cloud.particles.allFinite() &&
         s.cloud.momentum_particles.allFinite();
}

}  // namespace

AlgorithmState AlgorithmState::initial(Vector theta0, Particles particles0) {
  AlgorithmState s;
  s.theta_tilde = theta0;
  s.prev_theta = theta0;
  s.theta = std::move(theta0);
  s.cloud = ParticleCloud::from(std::move(particles0));
  return s;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::SvgdEm: return "svgd_em";
    case Method::MSvgdEm: return "msvgd_em";
    case Method::MSvgdEmAdagrad: return "msvgd_em_adagrad";
    case Method::Pgd: return "pgd";
    case Method::Custom: return "custom";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "svgd_em") return Method::SvgdEm;
  if (name == "msvgd_em") return Method::MSvgdEm;
  if (name == "msvgd_em_adagrad") return Method::MSvgdEmAdagrad;
  if (name == "pgd") return Method::Pgd;
  if (name == "custom") return Method::Custom;
  throw ContractViolation("unknown method '" + name + "'");
}

AlgorithmState svgd_em_step(const AlgorithmState& state, const LatentVariableModel& model,
                            const KernelSpec& kernel, double gamma) {
  check_state(state, model);
  const Particles& x = state.cloud.particles;

  AlgorithmState next;
  next.theta = state.theta + gamma * mean_grad_theta(model, state.theta, x);
  next.theta_tilde = next.theta;
  next.prev_theta = state.theta;

  const VelocityField v = velocity_at(model, kernel, next.theta, x);
  next.cloud.particles = x + gamma * v.per_particle;
  next.cloud.momentum_particles = next.cloud.particles;
  next.cloud.prev_particles = x;
  next.iteration = state.iteration + 1;
  return next;
}

AlgorithmState msvgd_em_step(const AlgorithmState& state, const LatentVariableModel& model,
                             const KernelSpec& kernel, double gamma, double alpha_theta, double alpha_x) {
  check_state(state, model);

  AlgorithmState next;
  next.theta = state.theta_tilde + gamma * mean_grad_theta(model, state.theta_tilde, state.cloud.particles);
  next.theta_tilde = next.theta + alpha_theta * (next.theta - state.theta);
  next.prev_theta = state.theta;

  next.cloud = wnes_particle_step(state.cloud, next.theta, model, kernel, gamma, alpha_x);
  next.iteration = state.iteration + 1;
  return next;
}

AlgorithmState msvgd_em_adagrad_step(const AlgorithmState& state, const LatentVariableModel& model,
                                     const KernelSpec& kernel, double alpha_theta, double alpha_x, double eta,
                                     double epsilon, EpsilonPlacement placement) {
  check_state(state, model);
  detail::require(eta > 0.0, "AdaGrad learning rate must be positive");
  detail::require(epsilon > 0.0, "AdaGrad stability constant must be positive");
  const bool theta_inside = placement != EpsilonPlacement::OutsideSqrt;
  const bool x_inside = placement == EpsilonPlacement::InsideSqrt;

  AlgorithmState next;
  next.iteration = state.iteration + 1;
  next.prev_theta = state.theta;

  // theta branch
  const Vector g_theta = mean_grad_theta(model, state.theta_tilde, state.cloud.particles);
  Vector acc_theta = state.adagrad_theta.value_or(Vector::Zero(g_theta.size()));
  detail::require(acc_theta.size() == g_theta.size(), "theta accumulator has the wrong dimension");
  acc_theta += g_theta.array().square().matrix();
  if (!acc_theta.allFinite()) throw NumericFailure("AdaGrad theta accumulator is not finite");
  const Vector denom_theta = adagrad_denominator(acc_theta, epsilon, theta_inside);
  next.theta = state.theta_tilde + eta * g_theta.cwiseQuotient(denom_theta);
  next.theta_tilde = next.theta + alpha_theta * (next.theta - state.theta);
  next.adagrad_theta = std::move(acc_theta);

  // particle branch, evaluated on the momentum particles at theta_{t+1}
  const Particles& lookahead = state.cloud.momentum_particles;
  const VelocityField g_x = velocity_at(model, kernel, next.theta, lookahead);
  Particles acc_x = state.adagrad_x.value_or(Particles::Zero(lookahead.rows(), lookahead.cols()));
  detail::require(acc_x.rows() == lookahead.rows() && acc_x.cols() == lookahead.cols(),
                  "particle accumulator has the wrong shape");
  acc_x += g_x.per_particle.array().square().matrix();
  if (!acc_x.allFinite()) throw NumericFailure("AdaGrad particle accumulator is not finite");
  const Particles denom_x = adagrad_denominator(acc_x, epsilon, x_inside);
  next.cloud.particles = lookahead + eta * g_x.per_particle.cwiseQuotient(denom_x);
  next.cloud.momentum_particles =
      next.cloud.particles + alpha_x * (next.cloud.particles - state.cloud.particles);
  next.cloud.prev_particles = state.cloud.particles;
  next.adagrad_x = std::move(acc_x);
  return next;
}

AlgorithmState pgd_step(const AlgorithmState& state, const LatentVariableModel& model, double gamma,
                        const NoiseSource& noise) {
  check_state(state, model);
  const Particles& x = state.cloud.particles;

  AlgorithmState next;
  next.theta = state.theta + gamma * mean_grad_theta(model, state.theta, x);
  next.theta_tilde = next.theta;
  next.prev_theta = state.theta;
  next.cloud = langevin_step(state.cloud, next.theta, model, gamma, noise, state.iteration);
  next.iteration = state.iteration + 1;
  return next;
}

AlgorithmState step(const AlgorithmState& state, const LatentVariableModel& model, const KernelSpec& kernel,
                    const AlgorithmConfig& config, const NoiseSource& noise) {
  switch (config.method) {
    case Method::SvgdEm:
      return svgd_em_step(state, model, kernel, config.gamma);
    case Method::MSvgdEm:
      return msvgd_em_step(state, model, kernel, config.gamma, config.alpha_theta, config.alpha_x);
    case Method::MSvgdEmAdagrad:
      return msvgd_em_adagrad_step(state, model, kernel, config.alpha_theta, config.alpha_x, config.gamma,
                                   config.adagrad_epsilon, config.epsilon_placement);
    case Method::Pgd:
      return pgd_step(state, model, config.gamma, noise);
    case Method::Custom:
      detail::require(static_cast<bool>(config.custom_step), "custom method without a step function");
      return config.custom_step(state, model, kernel, config);
  }
  throw ContractViolation("unknown method");
}

RunRecord run(const AlgorithmConfig& config, const LatentVariableModel& model, const KernelSpec& kernel,
              const Vector& theta0, const ParticleCloud& cloud0, const RunOptions& options) {
  detail::require(config.iterations >= 1, "a run needs at least one iteration");
  detail::require(options.metric_every >= 1, "metric stride must be positive");
  validate(kernel);
  const auto start = std::chrono::steady_clock::now();

  RunRecord record;
  record.config = config;
  record.seed = config.seed;
  record.metric_every = options.metric_every;
  record.theta_trajectory.reserve(config.iterations + 1);

  AlgorithmState state;
  state.theta = theta0;
  state.theta_tilde = theta0;
  state.prev_theta = theta0;
  state.cloud = cloud0;
  check_state(state, model);

  const GaussianNoise noise(config.seed);
  record.theta_trajectory.push_back(state.theta);
  if (options.metrics) options.metrics(state, record.metrics);

  for (std::size_t t = 0; t < config.iterations; ++t) {
    try {
      state = step(state, model, kernel, config, noise);
    } catch (const NumericFailure&) {
      throw DivergedError(state.iteration + 1);
    }
    if (!all_finite(state)) throw DivergedError(state.iteration);
    record.theta_trajectory.push_back(state.theta);
    if (options.metrics && state.iteration % options.metric_every == 0) options.metrics(state, record.metrics);
  }

  record.final_cloud = std::move(state.cloud);
  record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace msvgd
