#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msvgd/algorithms.hpp"
#include "msvgd/datasets.hpp"
#include "msvgd/harness.hpp"

namespace msvgd {

enum class ExperimentKind { ToyHM, BlrWisconsin, BnnMnist };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

struct MethodSpec {
  std::string label;
  AlgorithmConfig config;  // iterations and seed are filled in per run
};

struct HeatmapSpec {
  SweepAxis rows;
  SweepAxis columns;
  std::size_t method = 0;  // index into ExperimentConfig::methods
  // final_mse, iterations_to_converge, final_test_error or final_lppd
  std::string metric;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::ToyHM;
  std::size_t particles = 20;
  std::size_t iterations = 1000;
  std::vector<std::uint64_t> seeds;
  std::size_t metric_every = 1;
  double threshold = 0.05;
  std::filesystem::path output_dir = "results";
  std::uint64_t data_seed = 0;
  KernelSpec kernel = KernelSpec::auto_rbf(5.0);
  std::vector<MethodSpec> methods;
  std::optional<Vector> theta0;
  double theta0_low = -3.0;
  double theta0_high = 3.0;

  // toy_hm
  double sigma = 12.0;
  std::size_t d_y = 20;
  double theta_true = 10.0;

  // blr_wisconsin and bnn_mnist
  double train_fraction = 0.8;
  double prior_variance = 5.0;
  std::pair<int, int> digits{4, 9};
  std::size_t subset_size = 1000;
  std::size_t hidden = 40;
  std::filesystem::path data_dir;
  std::filesystem::path wisconsin_path = "wdbc.data";
  std::filesystem::path mnist_images_path = "mnist-49-images-idx3-ubyte";
  std::filesystem::path mnist_labels_path = "mnist-49-labels-idx1-ubyte";

  // gridsearch
  double grid_min = 1e-3;
  double grid_max = 1e2;
  std::size_t grid_points = 20;
  std::size_t grid_trials = 10;

  std::vector<std::size_t> kde_coordinates{0};
  std::optional<HeatmapSpec> heatmap;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Parses the flat JSON configuration document. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

// Directory consulted for relative dataset paths: MSVGD_DATA_DIR if set,
// then the configured data_dir, then the bundled data directory.
std::filesystem::path resolve_data_path(const ExperimentConfig& config, const std::filesystem::path& file);

// Everything a single seed needs: the model (fitted on the training split for
// the supervised experiments), the initial state and the held-out data.
struct Trial {
  std::shared_ptr<const LatentVariableModel> model;
  std::shared_ptr<const SupervisedModel> supervised;  // null for toy_hm
  Vector theta0;
  Particles x0;
  Matrix test_features;
  std::vector<int> test_labels;
  std::optional<Vector> theta_hat;
};

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }

  // Deterministic in (config, seed). All methods of one seed share the trial.
  Trial trial(std::uint64_t seed) const;

 private:
  ExperimentConfig config_;
  std::shared_ptr<const ToyHM> toy_;
  LabeledData data_;
};

struct MethodRun {
  std::size_t method = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::size_t diverged_at = 0;
  std::vector<Vector> theta_trajectory;
  Particles final_particles;
  MetricSeries metrics;  // truncated at the divergence point
  std::optional<std::size_t> iterations_to_converge;
  double wall_time = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<MethodRun> runs;  // method-major, then seed order
  std::optional<Heatmap> heatmap;
};

// Runs every (method, seed) pair and the optional heatmap sweep.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

// Writes runs.json, metrics.csv, summary.csv, per-metric SVG charts, the
// experiment specific tables and manifest.json into config.output_dir.
void write_artifacts(const ExperimentResult& result);

struct GridSearchResult {
  ExperimentConfig config;
  std::vector<std::pair<std::string, GridSearchReport>> reports;  // one per method
};

// Learning-rate search per method over log-spaced gamma in [grid_min, grid_max].
// Methods for which every gamma diverges get a report of +inf losses.
GridSearchResult run_gridsearch(const ExperimentConfig& config, int threads = 1);
void write_artifacts(const GridSearchResult& result);

// Equivalence and gradient-check suites; returns one line per check.
struct SelftestLine {
  std::string name;
  bool passed = false;
  std::string detail;
};
std::vector<SelftestLine> run_selftest(std::uint64_t seed = 0);

}  // namespace msvgd
