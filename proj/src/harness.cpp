#include "msvgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "msvgd/errors.hpp"

namespace msvgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::vector<double> mse_to_minimizer(const std::vector<Vector>& trajectory, const VectorRef& theta_hat) {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (const Vector& theta : trajectory) {
    detail::require(theta.size() == theta_hat.size(), "trajectory and minimiser differ in dimension");
    out.push_back((theta - theta_hat).squaredNorm() / static_cast<double>(theta.size()));
  }
  return out;
}

std::vector<double> mean_series(const std::vector<std::vector<double>>& series) {
  detail::require(!series.empty(), "mean_series needs at least one series");
  std::vector<double> out(series.front().size(), 0.0);
  for (const auto& s : series) {
    detail::require(s.size() == out.size(), "series differ in length");
    for (std::size_t t = 0; t < s.size(); ++t) out[t] += s[t];
  }
  for (double& v : out) v /= static_cast<double>(series.size());
  return out;
}

std::optional<std::size_t> iterations_to_converge(const std::vector<Vector>& trajectory,
                                                  const VectorRef& theta_hat, double threshold) {
  detail::require(threshold > 0.0, "convergence threshold must be positive");
  std::size_t first_inside = 0;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    detail::require(trajectory[t].size() == theta_hat.size(), "trajectory and minimiser differ in dimension");
    const double dist = (trajectory[t] - theta_hat).lpNorm<Eigen::Infinity>();
    if (!(dist < threshold)) first_inside = t + 1;
  }
  if (first_inside >= trajectory.size()) return std::nullopt;
  return first_inside;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

double test_error(std::span<const double> class_one_probability, std::span<const int> labels) {
  detail::require(!labels.empty(), "test set is empty");
  detail::require(class_one_probability.size() == labels.size(), "probabilities and labels differ in length");
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int predicted = class_one_probability[r] >= 0.5 ? 1 : 0;
    if (predicted != labels[r]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double test_error(const SupervisedModel& model, const Particles& cloud, const Matrix& features,
                  const std::vector<int>& labels) {
  detail::require(!labels.empty(), "test set is empty");
  const Vector p = predict_proba(model, cloud, features);
  return test_error(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), labels);
}

double lppd(std::span<const double> class_one_probability, std::span<const int> labels) {
  detail::require(!labels.empty(), "test set is empty");
  detail::require(class_one_probability.size() == labels.size(), "probabilities and labels differ in length");
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const double p = labels[r] == 1 ? class_one_probability[r] : 1.0 - class_one_probability[r];
    total += std::log(std::max(p, kLppdProbabilityFloor));
  }
  return total;
}

double lppd(const SupervisedModel& model, const Particles& cloud, const Matrix& features,
            const std::vector<int>& labels) {
  detail::require(!labels.empty(), "test set is empty");
  const Vector p = predict_proba(model, cloud, features);
  return lppd(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), labels);
}

std::vector<double> kde_1d(std::span<const double> samples, std::span<const double> eval_points, double bandwidth) {
  detail::require(!samples.empty(), "KDE needs at least one sample");
  detail::require(bandwidth > 0.0, "KDE bandwidth must be positive");
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out;
  out.reserve(eval_points.size());
  for (double p : eval_points) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (p - s) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    out.push_back(acc * norm);
  }
  return out;
}

double silverman_bandwidth(std::span<const double> samples) {
  const Summary s = summarize(samples);
  if (s.count < 2 || !(s.sd > 0.0)) return 1.0;
  return 1.06 * s.sd * std::pow(static_cast<double>(s.count), -0.2);
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  detail::require(lo > 0.0 && hi >= lo, "log_spaced needs 0 < lo <= hi");
  detail::require(count >= 1, "log_spaced needs at least one point");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

GridSearchReport grid_search_lr(std::span<const double> grid, std::size_t trials, std::uint64_t base_seed,
                                const TrialLoss& loss, int threads) {
  detail::require(!grid.empty(), "grid search needs at least one step size");
  detail::require(trials >= 1, "grid search needs at least one trial");

  std::vector<double> losses(grid.size() * trials, kInf);
  parallel_for(losses.size(), threads, [&](std::size_t cell) {
    const std::size_t g = cell / trials;
    const std::size_t k = cell % trials;
    try {
      const double value = loss(grid[g], base_seed + k);
      losses[cell] = std::isfinite(value) ? value : kInf;
    } catch (const DivergedError&) {
      losses[cell] = kInf;
    }
  });

  GridSearchReport report;
  report.grid.assign(grid.begin(), grid.end());
  report.mean_loss.resize(grid.size());
  report.diverged.resize(grid.size());
  bool found = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (std::size_t k = 0; k < trials; ++k) sum += losses[g * trials + k];
    report.mean_loss[g] = sum / static_cast<double>(trials);
    report.diverged[g] = !std::isfinite(report.mean_loss[g]);
    if (report.diverged[g]) continue;
    // Ties go to the smaller step size so the choice does not depend on grid order.
    const bool better = !found || report.mean_loss[g] < report.mean_loss[report.selected_index] ||
                        (report.mean_loss[g] == report.mean_loss[report.selected_index] &&
                         grid[g] < grid[report.selected_index]);
    if (better) {
      report.selected_index = g;
      found = true;
    }
  }
  if (!found) throw NoViableStepSize("every step size in the grid diverged");
  report.selected_gamma = grid[report.selected_index];
  return report;
}

RunLoss final_mse_loss(Vector theta_hat) {
  return [theta_hat = std::move(theta_hat)](const RunRecord& record) {
    const Vector& last = record.theta_trajectory.back();
    return (last - theta_hat).squaredNorm() / static_cast<double>(last.size());
  };
}

RunLoss final_test_error_loss(const SupervisedModel& model, Matrix features, std::vector<int> labels) {
  return [&model, features = std::move(features), labels = std::move(labels)](const RunRecord& record) {
    return test_error(model, record.final_cloud.particles, features, labels);
  };
}

GridSearchReport grid_search_lr(const AlgorithmConfig& base, const LatentVariableModel& model,
                                const KernelSpec& kernel, const TrialInitializer& init, const RunLoss& loss,
                                std::span<const double> grid, std::size_t trials, std::uint64_t base_seed,
                                int threads) {
  const TrialLoss trial = [&](double gamma, std::uint64_t seed) {
    AlgorithmConfig config = base;
    config.gamma = gamma;
    config.seed = seed;
    const TrialInit start = init(seed);
    return loss(run(config, model, kernel, start.theta0, start.cloud0));
  };
  return grid_search_lr(grid, trials, base_seed, trial, threads);
}

std::string SweepAxis::label() const {
  switch (parameter) {
    case SweepParameter::Gamma: return "gamma";
    case SweepParameter::Alpha: return "alpha";
    case SweepParameter::AlphaTheta: return "alpha_theta";
    case SweepParameter::AlphaX: return "alpha_x";
    case SweepParameter::Iterations: return "iterations";
    case SweepParameter::Theta0: return "theta0[" + std::to_string(index) + "]";
  }
  return "unknown";
}

void apply(const SweepAxis& axis, double value, SweepSetup& setup) {
  switch (axis.parameter) {
    case SweepParameter::Gamma: setup.config.gamma = value; break;
    case SweepParameter::Alpha:
      setup.config.alpha_theta = value;
      setup.config.alpha_x = value;
      break;
    case SweepParameter::AlphaTheta: setup.config.alpha_theta = value; break;
    case SweepParameter::AlphaX: setup.config.alpha_x = value; break;
    case SweepParameter::Iterations:
      detail::require(value >= 1.0, "iteration count must be at least one");
      setup.config.iterations = static_cast<std::size_t>(std::llround(value));
      break;
    case SweepParameter::Theta0:
      detail::require(axis.index >= 0 && axis.index < setup.theta0.size(), "theta0 index out of range");
      setup.theta0[axis.index] = value;
      break;
  }
}

Heatmap heatmap_sweep(const SweepAxis& rows, const SweepAxis& columns, const SweepSetup& fixed,
                      const CellEvaluator& evaluate, int threads) {
  detail::require(!rows.values.empty() && !columns.values.empty(), "heatmap axes must be non-empty");
  Heatmap map;
  map.row_label = rows.label();
  map.column_label = columns.label();
  map.rows = rows.values;
  map.columns = columns.values;
  const std::size_t cells = rows.values.size() * columns.values.size();
  map.values.assign(cells, kInf);
  std::vector<char> diverged(cells, 0);

  parallel_for(cells, threads, [&](std::size_t cell) {
    const std::size_t r = cell / columns.values.size();
    const std::size_t c = cell % columns.values.size();
    SweepSetup setup = fixed;
    apply(rows, rows.values[r], setup);
    apply(columns, columns.values[c], setup);
    try {
      const double value = evaluate(setup);
      if (std::isfinite(value)) {
        map.values[cell] = value;
      } else {
        diverged[cell] = 1;
      }
    } catch (const DivergedError&) {
      diverged[cell] = 1;
    }
  });
  map.diverged.assign(diverged.begin(), diverged.end());
  return map;
}

}  // namespace msvgd
