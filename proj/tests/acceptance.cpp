// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "msvgd/algorithms.hpp"
#include "msvgd/diagnostics.hpp"
#include "msvgd/errors.hpp"
#include "msvgd/experiment.hpp"
#include "msvgd/harness.hpp"
#include "msvgd/kernels.hpp"
#include "msvgd/models.hpp"
#include "msvgd/particles.hpp"

using namespace msvgd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool passed = false;
  std::string detail;
};

int worker_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

MethodSpec method(const std::string& label, Method m, double gamma, double alpha) {
  MethodSpec spec;
  spec.label = label;
  spec.config.method = m;
  spec.config.gamma = gamma;
  spec.config.alpha_theta = alpha;
  spec.config.alpha_x = alpha;
  return spec;
}

ExperimentConfig toy_setup() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::ToyHM;
  c.particles = 20;
  c.iterations = 1000;
  c.seeds = seed_range(20);
  c.metric_every = 1000;
  c.threshold = 0.05;
  c.sigma = 12.0;
  c.theta_true = 10.0;
  c.d_y = 20;
  c.methods = {method("svgd_em", Method::SvgdEm, 0.3, 0.0), method("msvgd_em(0.9)", Method::MSvgdEm, 0.3, 0.9)};
  return c;
}

ExperimentConfig blr_setup() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::BlrWisconsin;
  c.particles = 20;
  c.iterations = 500;
  c.seeds = seed_range(5);
  c.metric_every = 1;
  c.train_fraction = 0.8;
  c.data_dir = MSVGD_TEST_DATA_DIR;
  c.methods = {method("svgd_em", Method::SvgdEm, 0.01, 0.0), method("msvgd_em(0.9)", Method::MSvgdEm, 0.01, 0.9)};
  return c;
}

ExperimentConfig bnn_setup() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::BnnMnist;
  c.particles = 5;
  c.iterations = 200;
  c.seeds = seed_range(5);
  c.subset_size = 250;
  c.train_fraction = 0.8;
  c.hidden = 40;
  c.theta0 = Vector::Zero(2);
  c.data_dir = MSVGD_TEST_DATA_DIR;
  c.methods = {method("svgd_em", Method::MSvgdEmAdagrad, 0.1, 0.0),
               method("msvgd_em(0.9)", Method::MSvgdEmAdagrad, 0.1, 0.9)};
  return c;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1
Outcome ragd_equivalence() {
  const double gap = ragd_wnes_max_gap(2000, 7);
  return {gap <= 1e-12, "2000 instances, max gap " + fmt(gap)};
}

// 2
bool same_run(const LatentVariableModel& model, const Vector& theta0, const Particles& x0, double gamma) {
  AlgorithmConfig plain;
  plain.method = Method::SvgdEm;
  plain.gamma = gamma;
  plain.iterations = 100;
  AlgorithmConfig momentum = plain;
  momentum.method = Method::MSvgdEm;
  momentum.alpha_theta = 0.0;
  momentum.alpha_x = 0.0;
  const KernelSpec kernel = KernelSpec::auto_rbf(5.0);
  const RunRecord a = run(plain, model, kernel, theta0, ParticleCloud::from(x0));
  const RunRecord b = run(momentum, model, kernel, theta0, ParticleCloud::from(x0));
  if (a.theta_trajectory.size() != b.theta_trajectory.size()) return false;
  for (std::size_t t = 0; t < a.theta_trajectory.size(); ++t)
    if (!(a.theta_trajectory[t].array() == b.theta_trajectory[t].array()).all()) return false;
  return (a.final_cloud.particles.array() == b.final_cloud.particles.array()).all();
}

Outcome momentum_free_reduction() {
  const Trial toy = Experiment(toy_setup()).trial(0);
  const Trial blr = Experiment(blr_setup()).trial(0);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  Matrix features(40, 6);
  for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = n01(rng);
  std::vector<int> labels(40);
  for (auto& l : labels) l = static_cast<int>(rng() & 1U);
  const BinaryBNN bnn(features, labels, 5);
  Particles bnn_x0(5, bnn.dim_x());
  for (Eigen::Index i = 0; i < bnn_x0.size(); ++i) bnn_x0.data()[i] = n01(rng);

  const bool t = same_run(*toy.model, toy.theta0, toy.x0, 0.3);
  const bool b = same_run(*blr.model, blr.theta0, blr.x0, 0.01);
  const bool n = same_run(bnn, Vector::Zero(2), bnn_x0, 0.01);
  std::string detail = std::string("toy ") + (t ? "identical" : "differs") + ", blr " + (b ? "identical" : "differs") +
                       ", bnn " + (n ? "identical" : "differs");
  return {t && b && n, detail};
}

// 3
Outcome gradient_oracles() {
  constexpr int kPoints = 20;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const Trial toy = Experiment(toy_setup()).trial(0);
  const Trial blr = Experiment(blr_setup()).trial(0);
  const Trial bnn = Experiment(bnn_setup()).trial(0);

  struct Case {
    const char* name;
    const LatentVariableModel* model;
    double theta_scale;
    double x_scale;
    Eigen::Index sampled;  // 0 checks every coordinate
  };
  const Case cases[] = {{"toy", toy.model.get(), 10.0, 10.0, 0},
                        {"blr", blr.model.get(), 2.0, 1.0, 0},
                        {"bnn", bnn.model.get(), 1.0, 0.5, 100}};

  bool ok = true;
  std::ostringstream detail;
  for (const Case& c : cases) {
    double worst = 0.0;
    std::size_t coords = 0;
    for (int p = 0; p < kPoints; ++p) {
      Vector theta(c.model->dim_theta());
      for (auto& v : theta) v = c.theta_scale * unit(rng);
      Vector x(c.model->dim_x());
      for (auto& v : x) v = c.x_scale * n01(rng);
      std::vector<Eigen::Index> pick;
      if (c.sampled > 0) {
        std::uniform_int_distribution<Eigen::Index> any(0, c.model->dim_x() - 1);
        for (Eigen::Index k = 0; k < c.sampled; ++k) pick.push_back(any(rng));
      }
      const GradientCheck g = check_gradients(*c.model, theta, x, pick);
      worst = std::max({worst, g.max_rel_error_theta, g.max_rel_error_x});
      coords = g.x_coords_checked;
    }
    ok = ok && worst < 1e-5;
    detail << c.name << " " << fmt(worst) << " (" << coords << " x-coords/point) ";
  }
  return {ok, detail.str() + "over " + std::to_string(kPoints) + " points each"};
}

// 4 and 5 share one run
struct ToyOutcome {
  Outcome recovery;
  Outcome ratio;
};

ToyOutcome toy_recovery() {
  const ExperimentConfig c = toy_setup();
  const ExperimentResult r = run_experiment(c, worker_threads());
  const std::size_t n = c.seeds.size();
  std::size_t converged[2] = {0, 0};
  std::vector<double> iters[2];
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t s = 0; s < n; ++s) {
      const MethodRun& run = r.runs[m * n + s];
      if (!run.diverged && run.iterations_to_converge) {
        ++converged[m];
        iters[m].push_back(static_cast<double>(*run.iterations_to_converge));
      } else {
        iters[m].push_back(static_cast<double>(c.iterations));
      }
    }
  ToyOutcome out;
  out.recovery.passed = converged[0] >= 18 && converged[1] >= 18;
  out.recovery.detail = "converged svgd_em " + std::to_string(converged[0]) + "/20, msvgd_em(0.9) " +
                        std::to_string(converged[1]) + "/20";
  const double ratio = mean(iters[1]) / mean(iters[0]);
  out.ratio.passed = ratio <= 0.65;
  out.ratio.detail = "mean iterations " + fmt(mean(iters[0])) + " vs " + fmt(mean(iters[1])) + ", ratio " + fmt(ratio);
  return out;
}

// 6
std::size_t first_at_or_below(const std::vector<double>& series, double level) {
  for (std::size_t k = 0; k < series.size(); ++k)
    if (series[k] <= level) return k;
  return std::numeric_limits<std::size_t>::max();
}

Outcome blr_wisconsin() {
  const ExperimentConfig c = blr_setup();
  const ExperimentResult r = run_experiment(c, worker_threads());
  const std::size_t n = c.seeds.size();
  std::vector<double> finals[2];
  std::size_t faster = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const MethodRun& plain = r.runs[s];
    const MethodRun& accel = r.runs[n + s];
    for (std::size_t m = 0; m < 2; ++m) {
      const MethodRun& run = r.runs[m * n + s];
      finals[m].push_back(run.diverged ? 1.0 : run.metrics.at("test_error").back());
    }
    if (accel.diverged) continue;
    const std::size_t ta = first_at_or_below(accel.metrics.at("test_error"), 0.10);
    const std::size_t tp =
        plain.diverged ? std::numeric_limits<std::size_t>::max() : first_at_or_below(plain.metrics.at("test_error"), 0.10);
    if (ta != std::numeric_limits<std::size_t>::max() && ta <= tp) ++faster;
  }
  const bool level = mean(finals[0]) <= 0.10 && mean(finals[1]) <= 0.10;
  const bool majority = 2 * faster > n;
  return {level && majority, "mean final test error svgd_em " + fmt(mean(finals[0])) + ", msvgd_em(0.9) " +
                                 fmt(mean(finals[1])) + "; msvgd_em(0.9) first to 0.10 on " + std::to_string(faster) +
                                 "/" + std::to_string(n) + " seeds"};
}

// 7 and 8 share the BNN runs, stepped by hand so every accumulator is visible.
struct BnnOutcome {
  Outcome direction;
  Outcome adagrad;
};

BnnOutcome bnn_mnist() {
  const ExperimentConfig c = bnn_setup();
  const Experiment experiment(c);
  const KernelSpec kernel = c.kernel;
  const std::size_t n = c.seeds.size();

  struct Cell {
    double error = 1.0;
    double lppd = -kInf;
    bool accumulators_ok = true;
    bool denominators_ok = true;
    bool finite = true;
  };
  std::vector<Cell> cells(2 * n);
  std::vector<Trial> trials;
  for (std::uint64_t seed : c.seeds) trials.push_back(experiment.trial(seed));

  parallel_for(cells.size(), worker_threads(), [&](std::size_t job) {
    const std::size_t m = job / n, s = job % n;
    const MethodSpec& spec = c.methods[m];
    const Trial& trial = trials[s];
    Cell& cell = cells[job];
    AlgorithmState state = AlgorithmState::initial(trial.theta0, trial.x0);
    const double eps = spec.config.adagrad_epsilon;
    for (std::size_t t = 0; t < c.iterations; ++t) {
      AlgorithmState next = msvgd_em_adagrad_step(state, *trial.model, kernel, spec.config.alpha_theta,
                                                  spec.config.alpha_x, spec.config.gamma, eps,
                                                  spec.config.epsilon_placement);
      const Vector prev_theta = state.adagrad_theta.value_or(Vector::Zero(next.adagrad_theta->size()));
      const Particles prev_x =
          state.adagrad_x.value_or(Particles::Zero(next.adagrad_x->rows(), next.adagrad_x->cols()));
      const Vector& acc_theta = *next.adagrad_theta;
      const Particles& acc_x = *next.adagrad_x;
      cell.accumulators_ok = cell.accumulators_ok && (acc_theta.array() >= prev_theta.array()).all() &&
                             (acc_x.array() >= prev_x.array()).all();
      // theta: sqrt(G + eps); particles: sqrt(G) + eps
      cell.denominators_ok = cell.denominators_ok && ((acc_theta.array() + eps).sqrt() > 0.0).all() &&
                             ((acc_x.array().sqrt() + eps) > 0.0).all();
      if (!next.theta.allFinite() || !next.cloud.particles.allFinite()) {
        cell.finite = false;
        return;
      }
      state = std::move(next);
    }
    const Vector probs = predict_proba(*trial.supervised, state.cloud.particles, trial.test_features);
    const std::span<const double> p(probs.data(), static_cast<std::size_t>(probs.size()));
    cell.error = test_error(p, trial.test_labels);
    cell.lppd = lppd(p, trial.test_labels);
  });

  std::vector<double> err[2], lp[2];
  bool acc_ok = true, den_ok = true, finite = true;
  for (std::size_t job = 0; job < cells.size(); ++job) {
    err[job / n].push_back(cells[job].error);
    lp[job / n].push_back(cells[job].lppd);
    acc_ok = acc_ok && cells[job].accumulators_ok;
    den_ok = den_ok && cells[job].denominators_ok;
    finite = finite && cells[job].finite;
  }
  BnnOutcome out;
  out.direction.passed = finite && mean(err[1]) <= mean(err[0]) && mean(lp[1]) >= mean(lp[0]);
  out.direction.detail = "mean test error svgd_em " + fmt(mean(err[0])) + " vs msvgd_em(0.9) " + fmt(mean(err[1])) +
                         "; mean lppd " + fmt(mean(lp[0])) + " vs " + fmt(mean(lp[1]));
  out.adagrad.passed = acc_ok && den_ok && finite;
  out.adagrad.detail = std::string("accumulators ") + (acc_ok ? "nondecreasing" : "decreased") + ", denominators " +
                       (den_ok ? "positive" : "not positive") + " over " + std::to_string(cells.size()) + " runs of " +
                       std::to_string(c.iterations) + " iterations";
  return out;
}

// 9
Outcome grid_shape() {
  ExperimentConfig c = toy_setup();
  c.grid_min = 1e-3;
  c.grid_max = 1e2;
  c.grid_points = 20;
  c.grid_trials = 10;
  const GridSearchResult r = run_gridsearch(c, worker_threads());
  bool ok = true;
  std::ostringstream detail;
  for (const auto& [label, report] : r.reports) {
    const auto& loss = report.mean_loss;
    const std::size_t best = report.selected_index;
    const bool interior = best > 0 && best + 1 < loss.size() && std::isfinite(loss[best]) && loss[best] < loss.front();
    const bool inf_end = loss.size() == 20 && std::isinf(loss.back());
    std::size_t first_inf = loss.size();
    for (std::size_t g = 0; g < loss.size(); ++g)
      if (std::isinf(loss[g])) {
        first_inf = g;
        break;
      }
    // once diverged, stays diverged towards larger gamma
    bool tail = true;
    for (std::size_t g = first_inf; g < loss.size(); ++g) tail = tail && std::isinf(loss[g]);
    ok = ok && interior && inf_end && tail && report.grid.front() == 1e-3 && report.grid.back() == 1e2;
    detail << label << ": min at gamma " << fmt(report.selected_gamma) << ", inf from gamma "
           << (first_inf < loss.size() ? fmt(report.grid[first_inf]) : "none") << "; ";
  }
  std::string text = detail.str();
  if (text.size() >= 2) text.resize(text.size() - 2);
  return {ok, text};
}

// 10
Outcome property_suites() {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> dims(1, 12);
  int failures = 0;
  auto expect = [&](bool cond) { failures += cond ? 0 : 1; };
  auto gauss = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * n01(rng);
    return m;
  };

  // kernels
  for (const KernelSpec& spec : {KernelSpec::auto_rbf(5.0), KernelSpec::median_rbf()}) {
    for (int rep = 0; rep < 200; ++rep) {
      const int d = dims(rng);
      const double h = 0.2 + std::abs(3.0 * n01(rng));
      const Vector x = gauss(d, 1, 2.0), y = gauss(d, 1, 2.0);
      const double kxy = rbf_eval(spec, h, x, y);
      expect(kxy == rbf_eval(spec, h, y, x));
      expect(kxy >= 0.0 && kxy <= 1.0);
      expect(rbf_eval(spec, h, x, x) == 1.0);
      const Vector g = rbf_grad1(spec, h, x, y);
      for (int k = 0; k < d; ++k) {
        const double step = 1e-6;
        Vector xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        const double fd = (rbf_eval(spec, h, xp, y) - rbf_eval(spec, h, xm, y)) / (2 * step);
        expect(std::abs(fd - g[k]) <= 1e-7);
      }
    }
  }

  // particle engine
  const KernelSpec kernel = KernelSpec::auto_rbf(5.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + rep % 9, d = dims(rng);
    const Particles points = gauss(n, d, 2.0), scores = gauss(n, d, 1.0);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Particles pp(n, d), ps(n, d);
    for (int i = 0; i < n; ++i) {
      pp.row(i) = points.row(perm[static_cast<std::size_t>(i)]);
      ps.row(i) = scores.row(perm[static_cast<std::size_t>(i)]);
    }
    const auto v = svgd_velocity(points, scores, kernel, 5.0).per_particle;
    const auto vp = svgd_velocity(pp, ps, kernel, 5.0).per_particle;
    for (int i = 0; i < n; ++i)
      expect((vp.row(i) - v.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() <= 1e-14);

    const Particles one = gauss(1, d, 2.0), score = gauss(1, d, 1.0);
    expect((svgd_velocity(one, score, kernel, 5.0).per_particle.array() == score.array()).all());
  }

  // convergence detector
  auto traj = [](std::initializer_list<double> values) {
    std::vector<Vector> out;
    for (double v : values) out.push_back(Vector::Constant(1, v));
    return out;
  };
  const Vector zero = Vector::Zero(1);
  expect(iterations_to_converge(traj({0.01, 0.02, 0.0}), zero, 0.05) == std::optional<std::size_t>(0));
  expect(iterations_to_converge(traj({1.0, 0.01, 1.0, 0.01, 0.0}), zero, 0.05) == std::optional<std::size_t>(3));
  expect(iterations_to_converge(traj({1.0, 0.5, 0.01, 0.2}), zero, 0.05) == std::nullopt);
  expect(iterations_to_converge(traj({1.0, 0.05}), zero, 0.05) == std::nullopt);
  expect(iterations_to_converge(traj({1.0, -0.049}), zero, 0.05) == std::optional<std::size_t>(1));

  return {failures == 0, std::to_string(failures) + " property violations"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  std::optional<ToyOutcome> toy;
  std::optional<BnnOutcome> bnn;
  auto toy_once = [&]() -> const ToyOutcome& {
    if (!toy) toy = toy_recovery();
    return *toy;
  };
  auto bnn_once = [&]() -> const BnnOutcome& {
    if (!bnn) bnn = bnn_mnist();
    return *bnn;
  };

  const std::vector<Criterion> criteria = {
      {1, "RAGD equals WNes", ragd_equivalence},
      {2, "momentum-free reduction is bitwise", momentum_free_reduction},
      {3, "gradient oracles", gradient_oracles},
      {4, "ToyHM recovery", [&] { return toy_once().recovery; }},
      {5, "ToyHM acceleration ratio", [&] { return toy_once().ratio; }},
      {6, "BLR Wisconsin", blr_wisconsin},
      {7, "BNN MNIST direction", [&] { return bnn_once().direction; }},
      {8, "AdaGrad invariants", [&] { return bnn_once().adagrad; }},
      {9, "grid-search shape", grid_shape},
      {10, "property suites", property_suites},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
