#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msvgd/algorithms.hpp"

namespace msvgd {

// Per-iteration squared distance to the minimiser, averaged over dimensions.
std::vector<double> mse_to_minimizer(const std::vector<Vector>& trajectory, const VectorRef& theta_hat);

// Elementwise mean of equally long series.
std::vector<double> mean_series(const std::vector<std::vector<double>>& series);

// First t with ||theta_t - theta_hat||_inf < threshold after which the
// trajectory never leaves the band. std::nullopt if there is none.
std::optional<std::size_t> iterations_to_converge(const std::vector<Vector>& trajectory,
                                                  const VectorRef& theta_hat, double threshold);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double se = 0.0;  // sd / sqrt(count)
};

Summary summarize(std::span<const double> values);

// Fraction of rows where the thresholded probability disagrees with the label.
// Probabilities of exactly 0.5 predict label 1.
double test_error(std::span<const double> class_one_probability, std::span<const int> labels);
double test_error(const SupervisedModel& model, const Particles& cloud, const Matrix& features,
                  const std::vector<int>& labels);

inline constexpr double kLppdProbabilityFloor = 1e-12;

// sum_rows log p(label | row) with p floored at kLppdProbabilityFloor.
double lppd(std::span<const double> class_one_probability, std::span<const int> labels);
double lppd(const SupervisedModel& model, const Particles& cloud, const Matrix& features,
            const std::vector<int>& labels);

// Gaussian kernel density estimate evaluated at `eval_points`.
std::vector<double> kde_1d(std::span<const double> samples, std::span<const double> eval_points, double bandwidth);

// 1.06 * sd * n^(-1/5); falls back to 1 for degenerate samples.
double silverman_bandwidth(std::span<const double> samples);

std::vector<double> log_spaced(double lo, double hi, std::size_t count);

// Runs fn(0..count-1) on up to `threads` workers. Exceptions are rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

struct GridSearchReport {
  std::vector<double> grid;
  std::vector<double> mean_loss;  // +inf where any trial diverged
  std::vector<bool> diverged;
  std::size_t selected_index = 0;
  double selected_gamma = 0.0;
};

// Loss of one trial at a given step size; may throw DivergedError.
using TrialLoss = std::function<double(double gamma, std::uint64_t seed)>;

// Averages the loss over `trials` seeds (base_seed, base_seed + 1, ...) for
// every grid point and selects the minimiser. Throws NoViableStepSize when
// every grid point diverges.
GridSearchReport grid_search_lr(std::span<const double> grid, std::size_t trials, std::uint64_t base_seed,
                                const TrialLoss& loss, int threads = 1);

struct TrialInit {
  Vector theta0;
  ParticleCloud cloud0;
};

using TrialInitializer = std::function<TrialInit(std::uint64_t seed)>;
using RunLoss = std::function<double(const RunRecord&)>;

RunLoss final_mse_loss(Vector theta_hat);
RunLoss final_test_error_loss(const SupervisedModel& model, Matrix features, std::vector<int> labels);

// Grid search over gamma for one method, running the full algorithm per trial.
GridSearchReport grid_search_lr(const AlgorithmConfig& base, const LatentVariableModel& model,
                                const KernelSpec& kernel, const TrialInitializer& init, const RunLoss& loss,
                                std::span<const double> grid, std::size_t trials, std::uint64_t base_seed,
                                int threads = 1);

enum class SweepParameter {
  Gamma,
  // Sets alpha_theta and alpha_x together.
  Alpha,
  AlphaTheta,
  AlphaX,
  Iterations,
  // Component `index` of the initial parameter.
  Theta0,
};

struct SweepAxis {
  SweepParameter parameter = SweepParameter::Alpha;
  std::vector<double> values;
  Eigen::Index index = 0;

  std::string label() const;
};

struct SweepSetup {
  AlgorithmConfig config;
  Vector theta0;
};

void apply(const SweepAxis& axis, double value, SweepSetup& setup);

// Metric of one cell; may throw DivergedError.
using CellEvaluator = std::function<double(const SweepSetup&)>;

struct Heatmap {
  std::string row_label;
  std::string column_label;
  std::vector<double> rows;
  std::vector<double> columns;
  std::vector<double> values;  // row-major, +inf where diverged
  std::vector<bool> diverged;

  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
};

Heatmap heatmap_sweep(const SweepAxis& rows, const SweepAxis& columns, const SweepSetup& fixed,
                      const CellEvaluator& evaluate, int threads = 1);

}  // namespace msvgd
