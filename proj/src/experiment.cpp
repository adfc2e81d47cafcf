#include "msvgd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "msvgd/diagnostics.hpp"
#include "msvgd/errors.hpp"
#include "msvgd/svg.hpp"

#ifndef MSVGD_VERSION
#define MSVGD_VERSION "0.0.0"
#endif
#ifndef MSVGD_DEFAULT_DATA_DIR
#define MSVGD_DEFAULT_DATA_DIR "data"
#endif

namespace msvgd {

using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest representation that round-trips.
std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string placement_name(EpsilonPlacement p) {
  switch (p) {
    case EpsilonPlacement::AsPrinted: return "as_printed";
    case EpsilonPlacement::InsideSqrt: return "inside_sqrt";
    case EpsilonPlacement::OutsideSqrt: return "outside_sqrt";
  }
  return "as_printed";
}

EpsilonPlacement placement_from_string(const std::string& s) {
  if (s == "as_printed") return EpsilonPlacement::AsPrinted;
  if (s == "inside_sqrt") return EpsilonPlacement::InsideSqrt;
  if (s == "outside_sqrt") return EpsilonPlacement::OutsideSqrt;
  throw ConfigError("unknown epsilon_placement '" + s + "'");
}

SweepParameter sweep_from_string(const std::string& s) {
  if (s == "gamma") return SweepParameter::Gamma;
  if (s == "alpha") return SweepParameter::Alpha;
  if (s == "alpha_theta") return SweepParameter::AlphaTheta;
  if (s == "alpha_x") return SweepParameter::AlphaX;
  if (s == "iterations") return SweepParameter::Iterations;
  if (s == "theta0") return SweepParameter::Theta0;
  throw ConfigError("unknown sweep parameter '" + s + "'");
}

std::string sweep_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::Gamma: return "gamma";
    case SweepParameter::Alpha: return "alpha";
    case SweepParameter::AlphaTheta: return "alpha_theta";
    case SweepParameter::AlphaX: return "alpha_x";
    case SweepParameter::Iterations: return "iterations";
    case SweepParameter::Theta0: return "theta0";
  }
  return "alpha";
}

std::string default_label(const AlgorithmConfig& c) {
  std::string label = to_string(c.method);
  if (c.method == Method::MSvgdEm || c.method == Method::MSvgdEmAdagrad) {
    if (c.alpha_theta == c.alpha_x)
      label += "(alpha=" + fmt_short(c.alpha_x) + ")";
    else
      label += "(alpha_theta=" + fmt_short(c.alpha_theta) + ",alpha_x=" + fmt_short(c.alpha_x) + ")";
  }
  return label;
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

MethodSpec parse_method(const json& j) {
  if (!j.is_object()) throw ConfigError("each entry of 'methods' must be an object");
  reject_unknown(j,
                 {"method", "label", "gamma", "eta", "alpha", "alpha_theta", "alpha_x", "epsilon",
                  "epsilon_placement"},
                 "methods entry");
  MethodSpec m;
  try {
    m.config.method = method_from_string(get<std::string>(j, "method", "msvgd_em"));
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (m.config.method == Method::Custom) throw ConfigError("method 'custom' cannot be configured from JSON");
  m.config.gamma = get<double>(j, "gamma", get<double>(j, "eta", m.config.gamma));
  const double alpha = get<double>(j, "alpha", 0.0);
  m.config.alpha_theta = get<double>(j, "alpha_theta", alpha);
  m.config.alpha_x = get<double>(j, "alpha_x", alpha);
  m.config.adagrad_epsilon = get<double>(j, "epsilon", m.config.adagrad_epsilon);
  m.config.epsilon_placement = placement_from_string(get<std::string>(j, "epsilon_placement", "as_printed"));
  m.label = get<std::string>(j, "label", default_label(m.config));
  return m;
}

SweepAxis parse_axis(const json& j) {
  reject_unknown(j, {"parameter", "values", "index"}, "heatmap axis");
  SweepAxis axis;
  axis.parameter = sweep_from_string(get<std::string>(j, "parameter", "alpha"));
  axis.values = get<std::vector<double>>(j, "values", {});
  axis.index = get<Eigen::Index>(j, "index", 0);
  return axis;
}

json axis_json(const SweepAxis& a) {
  json j;
  j["parameter"] = sweep_name(a.parameter);
  j["values"] = a.values;
  if (a.parameter == SweepParameter::Theta0) j["index"] = a.index;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Particles standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Particles p(rows, cols);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = normal(rng);
  return p;
}

std::vector<std::string> theta_names(Eigen::Index dim) {
  if (dim == 1) return {"theta"};
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < dim; ++k) names.push_back("theta_" + std::to_string(k));
  return names;
}

MetricHook metric_hook(const Trial& trial, MetricSeries& sink) {
  const auto names = theta_names(trial.model->dim_theta());
  return [&trial, &sink, names](const AlgorithmState& state, MetricSeries&) {
    for (std::size_t k = 0; k < names.size(); ++k) sink[names[k]].push_back(state.theta[static_cast<Eigen::Index>(k)]);
    if (trial.theta_hat)
      sink["mse"].push_back((state.theta - *trial.theta_hat).squaredNorm() / static_cast<double>(state.theta.size()));
    if (trial.supervised) {
      const Vector p = predict_proba(*trial.supervised, state.cloud.particles, trial.test_features);
      const std::span<const double> probs(p.data(), static_cast<std::size_t>(p.size()));
      sink["test_error"].push_back(test_error(probs, trial.test_labels));
      sink["lppd"].push_back(lppd(probs, trial.test_labels));
    }
  };
}

AlgorithmConfig run_config(const ExperimentConfig& config, const MethodSpec& method, std::uint64_t seed) {
  AlgorithmConfig c = method.config;
  c.iterations = config.iterations;
  c.seed = seed;
  return c;
}

MethodRun execute(const ExperimentConfig& config, const Trial& trial, std::size_t method, const AlgorithmConfig& c,
                  std::uint64_t seed) {
  MethodRun out;
  out.method = method;
  out.seed = seed;
  RunOptions options;
  options.metric_every = config.metric_every;
  options.metrics = metric_hook(trial, out.metrics);
  try {
    RunRecord rec = run(c, *trial.model, config.kernel, trial.theta0, ParticleCloud::from(trial.x0), options);
    out.theta_trajectory = std::move(rec.theta_trajectory);
    out.final_particles = std::move(rec.final_cloud.particles);
    out.wall_time = rec.wall_time;
    if (trial.theta_hat)
      out.iterations_to_converge = iterations_to_converge(out.theta_trajectory, *trial.theta_hat, config.threshold);
  } catch (const DivergedError& e) {
    out.diverged = true;
    out.diverged_at = e.iteration();
  }
  return out;
}

double cell_metric(const std::string& metric, const MethodRun& run, const ExperimentConfig& config) {
  if (run.diverged) throw DivergedError(run.diverged_at);
  if (metric == "iterations_to_converge")
    return run.iterations_to_converge ? static_cast<double>(*run.iterations_to_converge)
                                      : static_cast<double>(run.theta_trajectory.size());
  const std::string key = metric.substr(std::string("final_").size());
  const auto it = run.metrics.find(key);
  if (it == run.metrics.end() || it->second.empty())
    throw ConfigError("metric '" + metric + "' is not available for " + to_string(config.experiment));
  return it->second.back();
}

json manifest_json(const ExperimentConfig& config, const std::string& command) {
  json m;
  m["library"] = "msvgd";
  m["version"] = MSVGD_VERSION;
  m["command"] = command;
  m["seeds"] = config.seeds;
  m["config"] = json::parse(config_to_json(config));
  json files = json::array();
  if (config.experiment != ExperimentKind::ToyHM) {
    std::vector<std::filesystem::path> paths;
    if (config.experiment == ExperimentKind::BlrWisconsin)
      paths.push_back(resolve_data_path(config, config.wisconsin_path));
    else {
      paths.push_back(resolve_data_path(config, config.mnist_images_path));
      paths.push_back(resolve_data_path(config, config.mnist_labels_path));
    }
    for (const auto& p : paths) {
      json f;
      f["path"] = p.string();
      std::error_code ec;
      const auto size = std::filesystem::file_size(p, ec);
      f["bytes"] = ec ? 0 : size;
      files.push_back(f);
    }
  }
  m["data_files"] = files;
  return m;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ToyHM: return "toy_hm";
    case ExperimentKind::BlrWisconsin: return "blr_wisconsin";
    case ExperimentKind::BnnMnist: return "bnn_mnist";
  }
  return "toy_hm";
}

ExperimentKind experiment_from_string(const std::string& name) {
  if (name == "toy_hm") return ExperimentKind::ToyHM;
  if (name == "blr_wisconsin") return ExperimentKind::BlrWisconsin;
  if (name == "bnn_mnist") return ExperimentKind::BnnMnist;
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (methods.empty()) throw ConfigError("no methods configured");
  if (particles < 1) throw ConfigError("particles must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (metric_every < 1) throw ConfigError("metric_every must be at least 1");
  if (!(threshold > 0)) throw ConfigError("threshold must be positive");
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  if (d_y < 1) throw ConfigError("d_y must be at least 1");
  if (!(prior_variance > 0)) throw ConfigError("prior_variance must be positive");
  if (hidden < 1) throw ConfigError("hidden must be at least 1");
  if (subset_size < 2) throw ConfigError("subset_size must be at least 2");
  if (!(theta0_low < theta0_high)) throw ConfigError("theta0_low must be below theta0_high");
  if (!(grid_min > 0 && grid_max >= grid_min)) throw ConfigError("grid bounds must satisfy 0 < grid_min <= grid_max");
  if (grid_points < 1 || grid_trials < 1) throw ConfigError("grid_points and grid_trials must be at least 1");
  try {
    msvgd::validate(kernel);
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  for (const auto& m : methods) {
    if (!(m.config.gamma > 0)) throw ConfigError("method '" + m.label + "' needs a positive gamma");
    if (m.config.method == Method::MSvgdEmAdagrad && !(m.config.adagrad_epsilon > 0))
      throw ConfigError("method '" + m.label + "' needs a positive epsilon");
  }
  if (heatmap) {
    if (heatmap->method >= methods.size()) throw ConfigError("heatmap method index out of range");
    if (heatmap->rows.values.empty() || heatmap->columns.values.empty())
      throw ConfigError("heatmap axes must be non-empty");
    static const std::set<std::string> metrics{"final_mse", "iterations_to_converge", "final_test_error",
                                               "final_lppd", "final_theta"};
    if (!metrics.count(heatmap->metric)) throw ConfigError("unknown heatmap metric '" + heatmap->metric + "'");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(j,
                 {"experiment", "particles", "iterations", "seeds", "num_seeds", "metric_every", "threshold",
                  "output_dir", "data_seed", "kernel", "bandwidth", "median_floor", "methods", "theta0",
                  "theta0_low", "theta0_high", "sigma", "d_y", "theta_true", "train_fraction", "prior_variance",
                  "digits", "subset_size", "hidden", "data_dir", "wisconsin_path", "mnist_images_path",
                  "mnist_labels_path", "grid_min", "grid_max", "grid_points", "grid_trials", "kde_coordinates",
                  "heatmap"},
                 "configuration");

  ExperimentConfig c;
  if (!j.contains("experiment")) throw ConfigError("configuration lacks 'experiment'");
  c.experiment = experiment_from_string(get<std::string>(j, "experiment", ""));
  c.particles = get<std::size_t>(j, "particles", c.particles);
  c.iterations = get<std::size_t>(j, "iterations", c.iterations);
  if (j.contains("seeds")) {
    c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", {});
  } else {
    const auto n = get<std::size_t>(j, "num_seeds", 1);
    for (std::size_t s = 0; s < n; ++s) c.seeds.push_back(s);
  }
  c.metric_every = get<std::size_t>(j, "metric_every", c.metric_every);
  c.threshold = get<double>(j, "threshold", c.threshold);
  c.output_dir = get<std::string>(j, "output_dir", c.output_dir.string());
  c.data_seed = get<std::uint64_t>(j, "data_seed", c.data_seed);

  const std::string kernel = get<std::string>(j, "kernel", "auto_rbf");
  if (kernel == "auto_rbf")
    c.kernel = KernelSpec::auto_rbf(get<double>(j, "bandwidth", 5.0));
  else if (kernel == "median_rbf")
    c.kernel = KernelSpec::median_rbf(get<double>(j, "median_floor", 1e-3));
  else
    throw ConfigError("unknown kernel '" + kernel + "'");

  if (j.contains("methods")) {
    if (!j["methods"].is_array()) throw ConfigError("'methods' must be an array");
    for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m));
  }
  if (j.contains("theta0")) {
    const auto v = get<std::vector<double>>(j, "theta0", {});
    c.theta0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  c.theta0_low = get<double>(j, "theta0_low", c.theta0_low);
  c.theta0_high = get<double>(j, "theta0_high", c.theta0_high);
  c.sigma = get<double>(j, "sigma", c.sigma);
  c.d_y = get<std::size_t>(j, "d_y", c.d_y);
  c.theta_true = get<double>(j, "theta_true", c.theta_true);
  c.train_fraction = get<double>(j, "train_fraction", c.train_fraction);
  c.prior_variance = get<double>(j, "prior_variance", c.prior_variance);
  if (j.contains("digits")) {
    const auto d = get<std::vector<int>>(j, "digits", {});
    if (d.size() != 2 || d[0] == d[1]) throw ConfigError("'digits' must hold two distinct labels");
    c.digits = {d[0], d[1]};
  }
  c.subset_size = get<std::size_t>(j, "subset_size", c.subset_size);
  c.hidden = get<std::size_t>(j, "hidden", c.hidden);
  c.data_dir = get<std::string>(j, "data_dir", "");
  c.wisconsin_path = get<std::string>(j, "wisconsin_path", c.wisconsin_path.string());
  c.mnist_images_path = get<std::string>(j, "mnist_images_path", c.mnist_images_path.string());
  c.mnist_labels_path = get<std::string>(j, "mnist_labels_path", c.mnist_labels_path.string());
  c.grid_min = get<double>(j, "grid_min", c.grid_min);
  c.grid_max = get<double>(j, "grid_max", c.grid_max);
  c.grid_points = get<std::size_t>(j, "grid_points", c.grid_points);
  c.grid_trials = get<std::size_t>(j, "grid_trials", c.grid_trials);
  c.kde_coordinates = get<std::vector<std::size_t>>(j, "kde_coordinates", c.kde_coordinates);
  if (j.contains("heatmap")) {
    const json& h = j["heatmap"];
    reject_unknown(h, {"rows", "columns", "method", "metric"}, "heatmap");
    if (!h.contains("rows") || !h.contains("columns")) throw ConfigError("heatmap needs 'rows' and 'columns'");
    HeatmapSpec spec;
    spec.rows = parse_axis(h["rows"]);
    spec.columns = parse_axis(h["columns"]);
    spec.method = get<std::size_t>(h, "method", 0);
    spec.metric = get<std::string>(h, "metric", c.experiment == ExperimentKind::ToyHM ? "final_mse" : "final_test_error");
    c.heatmap = spec;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["particles"] = c.particles;
  j["iterations"] = c.iterations;
  j["seeds"] = c.seeds;
  j["metric_every"] = c.metric_every;
  j["threshold"] = c.threshold;
  j["output_dir"] = c.output_dir.string();
  j["data_seed"] = c.data_seed;
  if (c.kernel.variant == KernelVariant::AutoRBF) {
    j["kernel"] = "auto_rbf";
    j["bandwidth"] = std::get<FixedBandwidth>(c.kernel.bandwidth).h;
  } else {
    j["kernel"] = "median_rbf";
    j["median_floor"] = std::get<MedianHeuristic>(c.kernel.bandwidth).floor;
  }
  json methods = json::array();
  for (const auto& m : c.methods) {
    json e;
    e["label"] = m.label;
    e["method"] = to_string(m.config.method);
    e["gamma"] = m.config.gamma;
    e["alpha_theta"] = m.config.alpha_theta;
    e["alpha_x"] = m.config.alpha_x;
    e["epsilon"] = m.config.adagrad_epsilon;
    e["epsilon_placement"] = placement_name(m.config.epsilon_placement);
    methods.push_back(e);
  }
  j["methods"] = methods;
  if (c.theta0) j["theta0"] = std::vector<double>(c.theta0->data(), c.theta0->data() + c.theta0->size());
  j["theta0_low"] = c.theta0_low;
  j["theta0_high"] = c.theta0_high;
  j["sigma"] = c.sigma;
  j["d_y"] = c.d_y;
  j["theta_true"] = c.theta_true;
  j["train_fraction"] = c.train_fraction;
  j["prior_variance"] = c.prior_variance;
  j["digits"] = {c.digits.first, c.digits.second};
  j["subset_size"] = c.subset_size;
  j["hidden"] = c.hidden;
  j["data_dir"] = c.data_dir.string();
  j["wisconsin_path"] = c.wisconsin_path.string();
  j["mnist_images_path"] = c.mnist_images_path.string();
  j["mnist_labels_path"] = c.mnist_labels_path.string();
  j["grid_min"] = c.grid_min;
  j["grid_max"] = c.grid_max;
  j["grid_points"] = c.grid_points;
  j["grid_trials"] = c.grid_trials;
  j["kde_coordinates"] = c.kde_coordinates;
  if (c.heatmap) {
    json h;
    h["rows"] = axis_json(c.heatmap->rows);
    h["columns"] = axis_json(c.heatmap->columns);
    h["method"] = c.heatmap->method;
    h["metric"] = c.heatmap->metric;
    j["heatmap"] = h;
  }
  return j.dump(2);
}

std::filesystem::path resolve_data_path(const ExperimentConfig& config, const std::filesystem::path& file) {
  if (file.is_absolute()) return file;
  if (const char* env = std::getenv("MSVGD_DATA_DIR"); env && *env) return std::filesystem::path(env) / file;
  if (!config.data_dir.empty()) return config.data_dir / file;
  return std::filesystem::path(MSVGD_DEFAULT_DATA_DIR) / file;
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  switch (config_.experiment) {
    case ExperimentKind::ToyHM: {
      std::mt19937_64 rng(config_.data_seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector y(static_cast<Eigen::Index>(config_.d_y));
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double x = config_.theta_true + config_.sigma * normal(rng);
        y[i] = x + normal(rng);
      }
      toy_ = std::make_shared<ToyHM>(std::move(y), config_.sigma);
      break;
    }
    case ExperimentKind::BlrWisconsin: {
      const auto path = resolve_data_path(config_, config_.wisconsin_path);
      try {
        data_ = load_wisconsin(path);
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
      break;
    }
    case ExperimentKind::BnnMnist: {
      const auto images = resolve_data_path(config_, config_.mnist_images_path);
      const auto labels = resolve_data_path(config_, config_.mnist_labels_path);
      try {
        data_ = load_mnist_pair(images, labels, config_.digits, config_.subset_size);
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
      break;
    }
  }
  if (config_.theta0) {
    const Eigen::Index dim = config_.experiment == ExperimentKind::BnnMnist ? 2 : 1;
    if (config_.theta0->size() != dim)
      throw ConfigError("theta0 must have " + std::to_string(dim) + " entries for " + to_string(config_.experiment));
  }
}

Trial Experiment::trial(std::uint64_t seed) const {
  Trial t;
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(config_.particles);
  if (config_.experiment == ExperimentKind::ToyHM) {
    t.model = toy_;
    if (config_.theta0) {
      t.theta0 = *config_.theta0;
    } else {
      std::uniform_real_distribution<double> uniform(config_.theta0_low, config_.theta0_high);
      t.theta0 = Vector::Constant(1, uniform(rng));
    }
    t.x0 = standard_normal(rng, n, toy_->dim_x());
    t.theta_hat = Vector::Constant(1, toy_hm_empirical_mle(toy_->y()));
    return t;
  }

  const TrainTestSplit split = train_test_split(data_, config_.train_fraction, seed);
  const Standardizer scaler = Standardizer::fit(split.train.features);
  t.test_features = scaler.apply(split.test.features);
  t.test_labels = split.test.labels;
  if (config_.experiment == ExperimentKind::BlrWisconsin) {
    auto model = std::make_shared<BayesLogReg>(scaler.apply(split.train.features), split.train.labels,
                                               config_.prior_variance);
    t.supervised = model;
    t.model = model;
    if (config_.theta0) {
      t.theta0 = *config_.theta0;
    } else {
      std::uniform_real_distribution<double> uniform(config_.theta0_low, config_.theta0_high);
      t.theta0 = Vector::Constant(1, uniform(rng));
    }
  } else {
    auto model = std::make_shared<BinaryBNN>(scaler.apply(split.train.features), split.train.labels,
                                             static_cast<Eigen::Index>(config_.hidden));
    t.supervised = model;
    t.model = model;
    t.theta0 = config_.theta0 ? *config_.theta0 : Vector::Zero(2);
  }
  t.x0 = standard_normal(rng, n, t.model->dim_x());
  return t;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  const Experiment experiment(config);
  ExperimentResult result;
  result.config = config;
  const std::size_t n_seeds = config.seeds.size();

  std::vector<Trial> trials(n_seeds);
  parallel_for(n_seeds, threads, [&](std::size_t s) { trials[s] = experiment.trial(config.seeds[s]); });

  result.runs.resize(config.methods.size() * n_seeds);
  parallel_for(result.runs.size(), threads, [&](std::size_t job) {
    const std::size_t m = job / n_seeds, s = job % n_seeds;
    result.runs[job] = execute(config, trials[s], m, run_config(config, config.methods[m], config.seeds[s]),
                               config.seeds[s]);
  });

  if (config.heatmap) {
    const HeatmapSpec& spec = *config.heatmap;
    SweepSetup fixed;
    fixed.config = run_config(config, config.methods[spec.method], 0);
    const bool sweeps_theta0 =
        spec.rows.parameter == SweepParameter::Theta0 || spec.columns.parameter == SweepParameter::Theta0;
    if (sweeps_theta0) fixed.theta0 = config.theta0 ? *config.theta0 : trials.front().theta0;
    ExperimentConfig cell_config = config;
    result.heatmap = heatmap_sweep(
        spec.rows, spec.columns, fixed,
        [&](const SweepSetup& setup) {
          double total = 0.0;
          for (std::size_t s = 0; s < n_seeds; ++s) {
            Trial trial = trials[s];
            if (sweeps_theta0) trial.theta0 = setup.theta0;
            AlgorithmConfig c = setup.config;
            c.seed = config.seeds[s];
            ExperimentConfig local = cell_config;
            local.iterations = c.iterations;
            total += cell_metric(spec.metric, execute(local, trial, spec.method, c, c.seed), config);
          }
          return total / static_cast<double>(n_seeds);
        },
        threads);
  }
  return result;
}

void write_artifacts(const ExperimentResult& result) {
  const ExperimentConfig& config = result.config;
  const auto& dir = config.output_dir;
  ensure_dir(dir);

  // metrics.csv
  std::ostringstream csv;
  csv << "iteration,method,alpha,seed,metric,value\n";
  for (const auto& r : result.runs) {
    const MethodSpec& m = config.methods[r.method];
    const std::string alpha = fmt_short(m.config.alpha_x);
    for (const auto& [name, values] : r.metrics)
      for (std::size_t k = 0; k < values.size(); ++k)
        csv << k * config.metric_every << ',' << m.label << ',' << alpha << ',' << r.seed << ',' << name << ','
            << format_real(values[k]) << '\n';
  }
  write_text(dir / "metrics.csv", csv.str());

  // summary.csv
  std::ostringstream summary;
  summary << "method,alpha,statistic,count,mean,sd,se,diverged\n";
  const std::size_t n_seeds = config.seeds.size();
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const MethodSpec& spec = config.methods[m];
    std::map<std::string, std::vector<double>> finals;
    std::vector<double> converge;
    std::size_t diverged = 0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const MethodRun& r = result.runs[m * n_seeds + s];
      if (r.diverged) {
        ++diverged;
        continue;
      }
      for (const auto& [name, values] : r.metrics)
        if (!values.empty()) finals["final_" + name].push_back(values.back());
      if (r.iterations_to_converge) converge.push_back(static_cast<double>(*r.iterations_to_converge));
    }
    if (config.experiment == ExperimentKind::ToyHM) finals["iterations_to_converge"] = converge;
    for (const auto& [name, values] : finals) {
      const Summary st = summarize(values);
      summary << spec.label << ',' << fmt_short(spec.config.alpha_x) << ',' << name << ',' << st.count << ','
              << format_real(st.mean) << ',' << format_real(st.sd) << ',' << format_real(st.se) << ',' << diverged << '\n';
    }
  }
  write_text(dir / "summary.csv", summary.str());

  if (config.experiment == ExperimentKind::ToyHM) {
    std::ostringstream conv;
    conv << "method,alpha,seed,iterations_to_converge\n";
    for (const auto& r : result.runs) {
      const MethodSpec& m = config.methods[r.method];
      conv << m.label << ',' << fmt_short(m.config.alpha_x) << ',' << r.seed << ',';
      if (r.iterations_to_converge) conv << *r.iterations_to_converge;
      conv << '\n';
    }
    write_text(dir / "convergence.csv", conv.str());
  }

  if (config.experiment == ExperimentKind::BlrWisconsin) {
    std::ostringstream kde;
    kde << "method,alpha,coordinate,point,density\n";
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t coord : config.kde_coordinates) {
        std::vector<double> samples;
        for (std::size_t s = 0; s < n_seeds; ++s) {
          const MethodRun& r = result.runs[m * n_seeds + s];
          if (r.diverged || static_cast<Eigen::Index>(coord) >= r.final_particles.cols()) continue;
          for (Eigen::Index i = 0; i < r.final_particles.rows(); ++i)
            samples.push_back(r.final_particles(i, static_cast<Eigen::Index>(coord)));
        }
        if (samples.empty()) continue;
        const double bw = silverman_bandwidth(samples);
        const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
        std::vector<double> points;
        constexpr int kPoints = 200;
        for (int k = 0; k < kPoints; ++k)
          points.push_back(*lo - 4 * bw + (*hi - *lo + 8 * bw) * k / (kPoints - 1.0));
        const auto dens = kde_1d(samples, points, bw);
        for (std::size_t k = 0; k < points.size(); ++k)
          kde << config.methods[m].label << ',' << fmt_short(config.methods[m].config.alpha_x) << ',' << coord << ','
              << format_real(points[k]) << ',' << format_real(dens[k]) << '\n';
      }
    }
    write_text(dir / "kde.csv", kde.str());
  }

  // One chart per metric: mean over the seeds that did not diverge.
  std::set<std::string> metric_names;
  for (const auto& r : result.runs)
    for (const auto& [name, values] : r.metrics) metric_names.insert(name);
  for (const auto& name : metric_names) {
    std::vector<LineSeries> series;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      std::vector<std::vector<double>> rows;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const MethodRun& r = result.runs[m * n_seeds + s];
        const auto it = r.metrics.find(name);
        if (!r.diverged && it != r.metrics.end()) rows.push_back(it->second);
      }
      LineSeries line;
      line.name = config.methods[m].label;
      if (!rows.empty()) {
        line.y = mean_series(rows);
        for (std::size_t k = 0; k < line.y.size(); ++k) line.x.push_back(static_cast<double>(k * config.metric_every));
      }
      series.push_back(std::move(line));
    }
    write_text(dir / ("plot_" + name + ".svg"),
               line_chart_svg(to_string(config.experiment) + ": " + name, "iteration", name, series));
  }

  if (result.heatmap) {
    const Heatmap& h = *result.heatmap;
    std::ostringstream out;
    out << h.row_label << ',' << h.column_label << ',' << config.heatmap->metric << ",diverged\n";
    for (std::size_t r = 0; r < h.rows.size(); ++r)
      for (std::size_t c = 0; c < h.columns.size(); ++c)
        out << format_real(h.rows[r]) << ',' << format_real(h.columns[c]) << ',' << format_real(h.at(r, c)) << ','
            << (h.diverged[r * h.columns.size() + c] ? 1 : 0) << '\n';
    write_text(dir / "heatmap.csv", out.str());
    write_text(dir / "heatmap.svg", heatmap_svg(config.methods[config.heatmap->method].label + ": " +
                                                    config.heatmap->metric,
                                                h));
  }

  json runs = json::array();
  for (const auto& r : result.runs) {
    const MethodSpec& m = config.methods[r.method];
    json e;
    e["label"] = m.label;
    e["method"] = to_string(m.config.method);
    e["gamma"] = m.config.gamma;
    e["alpha_theta"] = m.config.alpha_theta;
    e["alpha_x"] = m.config.alpha_x;
    e["seed"] = r.seed;
    e["diverged"] = r.diverged;
    if (r.diverged) e["diverged_at"] = r.diverged_at;
    if (!r.theta_trajectory.empty()) {
      const Vector& last = r.theta_trajectory.back();
      e["theta_final"] = std::vector<double>(last.data(), last.data() + last.size());
    }
    if (config.experiment == ExperimentKind::ToyHM)
      e["iterations_to_converge"] = r.iterations_to_converge ? json(*r.iterations_to_converge) : json(nullptr);
    json finals;
    for (const auto& [name, values] : r.metrics)
      if (!values.empty() && std::isfinite(values.back())) finals[name] = values.back();
    e["final_metrics"] = finals;
    e["wall_time_seconds"] = r.wall_time;
    runs.push_back(e);
  }
  write_text(dir / "runs.json", runs.dump(2) + "\n");
  write_text(dir / "manifest.json", manifest_json(config, "run").dump(2) + "\n");
}

GridSearchResult run_gridsearch(const ExperimentConfig& config, int threads) {
  const Experiment experiment(config);
  GridSearchResult result;
  result.config = config;
  const std::vector<double> grid = log_spaced(config.grid_min, config.grid_max, config.grid_points);

  for (const auto& method : config.methods) {
    const TrialLoss loss = [&](double gamma, std::uint64_t seed) {
      const Trial trial = experiment.trial(seed);
      AlgorithmConfig c = run_config(config, method, seed);
      c.gamma = gamma;
      const RunRecord rec = run(c, *trial.model, config.kernel, trial.theta0, ParticleCloud::from(trial.x0));
      if (trial.theta_hat) {
        const Vector& last = rec.theta_trajectory.back();
        return (last - *trial.theta_hat).squaredNorm() / static_cast<double>(last.size());
      }
      return test_error(*trial.supervised, rec.final_cloud.particles, trial.test_features, trial.test_labels);
    };
    GridSearchReport report;
    try {
      report = grid_search_lr(grid, config.grid_trials, config.seeds.front(), loss, threads);
    } catch (const NoViableStepSize&) {
      report.grid = grid;
      report.mean_loss.assign(grid.size(), kInf);
      report.diverged.assign(grid.size(), true);
      report.selected_index = grid.size();
      report.selected_gamma = std::numeric_limits<double>::quiet_NaN();
    }
    result.reports.emplace_back(method.label, std::move(report));
  }
  return result;
}

void write_artifacts(const GridSearchResult& result) {
  const ExperimentConfig& config = result.config;
  ensure_dir(config.output_dir);
  std::ostringstream csv;
  csv << "method,gamma,mean_loss,diverged,selected\n";
  std::vector<LineSeries> series;
  json selected = json::object();
  for (const auto& [label, report] : result.reports) {
    LineSeries line;
    line.name = label;
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
      csv << label << ',' << format_real(report.grid[g]) << ',' << format_real(report.mean_loss[g]) << ','
          << (report.diverged[g] ? 1 : 0) << ',' << (g == report.selected_index ? 1 : 0) << '\n';
      line.x.push_back(std::log10(report.grid[g]));
      line.y.push_back(report.mean_loss[g]);
    }
    series.push_back(std::move(line));
    selected[label] = std::isnan(report.selected_gamma) ? json(nullptr) : json(report.selected_gamma);
  }
  write_text(config.output_dir / "gridsearch.csv", csv.str());
  write_text(config.output_dir / "gridsearch.svg",
             line_chart_svg(to_string(config.experiment) + ": loss vs step size", "log10 gamma",
                            config.experiment == ExperimentKind::ToyHM ? "final mse" : "final test error", series));
  json manifest = manifest_json(config, "gridsearch");
  manifest["selected_gamma"] = selected;
  write_text(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<SelftestLine> run_selftest(std::uint64_t seed) {
  std::vector<SelftestLine> lines;
  auto add = [&](std::string name, bool ok, std::string detail) {
    lines.push_back({std::move(name), ok, std::move(detail)});
  };

  const double gap = ragd_wnes_max_gap(1000, seed);
  add("exp-map step equals closed-form momentum step (1000 instances)", gap <= 1e-12, "max gap " + format_real(gap));

  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vector = [&](Eigen::Index n, double scale) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * normal(rng);
    return v;
  };
  auto random_labels = [&](Eigen::Index n) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = normal(rng) > 0 ? 1 : 0;
    return labels;
  };
  auto features = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix f(rows, cols);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = normal(rng);
    return f;
  };

  auto check = [&](const std::string& name, const LatentVariableModel& model, double theta_scale,
                   double x_scale) {
    double worst_theta = 0, worst_x = 0;
    for (int p = 0; p < 20; ++p) {
      const Vector theta = random_vector(model.dim_theta(), theta_scale);
      const Vector x = random_vector(model.dim_x(), x_scale);
      const GradientCheck g = check_gradients(model, theta, x);
      worst_theta = std::max(worst_theta, g.max_rel_error_theta);
      worst_x = std::max(worst_x, g.max_rel_error_x);
    }
    add(name + " gradients match central differences", worst_theta < 1e-5 && worst_x < 1e-5,
        "theta " + format_real(worst_theta) + ", x " + format_real(worst_x));
  };

  const ToyHM toy(random_vector(20, 10.0), 12.0);
  check("toy_hm", toy, 5.0, 3.0);
  const BayesLogReg blr(features(60, 8), random_labels(60), 5.0);
  check("bayes_log_reg", blr, 2.0, 1.0);
  const BinaryBNN bnn(features(30, 10), random_labels(30), 6);
  check("binary_bnn", bnn, 0.5, 1.0);
  return lines;
}

}  // namespace msvgd
