#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "msvgd/errors.hpp"
#include "msvgd/harness.hpp"
#include "support.hpp"

using namespace msvgd;

namespace {

std::vector<Vector> scalar_trajectory(std::initializer_list<double> values) {
  std::vector<Vector> out;
  for (double v : values) out.push_back(Vector::Constant(1, v));
  return out;
}

const Vector kZero = Vector::Zero(1);

struct ToySetup {
  ToyHM model;
  double theta_hat;
};

ToySetup toy_setup() {
  std::mt19937_64 rng(0);
  Vector y(20);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < 20; ++i) y[i] = 10.0 + 12.0 * normal(rng) + normal(rng);
  const double hat = toy_hm_empirical_mle(y);
  return {ToyHM(y, 12.0), hat};
}

TrialInit toy_init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  TrialInit init;
  init.theta0 = Vector::Constant(1, u(rng));
  init.cloud0 = ParticleCloud::from(testing::gaussian_matrix(rng, 20, 20));
  return init;
}

}  // namespace

TEST_CASE("mse_to_minimizer") {
  CHECK(mse_to_minimizer(scalar_trajectory({2, 2, 2}), Vector::Constant(1, 2.0)) == std::vector<double>{0, 0, 0});
  CHECK(mse_to_minimizer(scalar_trajectory({0, 1, 2}), Vector::Constant(1, 2.0)) == std::vector<double>{4, 1, 0});
  std::vector<Vector> two_d{Vector::Constant(2, 1.0)};
  CHECK(mse_to_minimizer(two_d, Vector::Zero(2)) == std::vector<double>{1.0});
  CHECK_THROWS_AS(mse_to_minimizer(two_d, Vector::Zero(1)), ContractViolation);

  const std::vector<std::vector<double>> series{
      mse_to_minimizer(scalar_trajectory({0, 1, 2}), kZero),
      mse_to_minimizer(scalar_trajectory({3, 1, 0}), kZero),
      mse_to_minimizer(scalar_trajectory({-3, 2, 1}), kZero),
  };
  const auto mean = mean_series(series);
  CHECK(mean[0] == doctest::Approx((0 + 9 + 9) / 3.0));
  CHECK(mean[1] == doctest::Approx((1 + 1 + 4) / 3.0));
  CHECK(mean[2] == doctest::Approx((4 + 0 + 1) / 3.0));
}

TEST_CASE("iterations_to_converge") {
  CHECK(iterations_to_converge(scalar_trajectory({0.01, 0.0, -0.02}), kZero, 0.05) == 0u);

  std::vector<Vector> enter7;
  for (int t = 0; t < 20; ++t) enter7.push_back(Vector::Constant(1, t < 7 ? 1.0 - 0.1 * t : 0.01));
  CHECK(iterations_to_converge(enter7, kZero, 0.05) == 7u);

  std::vector<Vector> reenter;
  for (int t = 0; t < 15; ++t) {
    const bool inside = (t >= 3 && t < 5) || t >= 9;
    reenter.push_back(Vector::Constant(1, inside ? 0.02 : 0.5));
  }
  CHECK(iterations_to_converge(reenter, kZero, 0.05) == 9u);

  CHECK_FALSE(iterations_to_converge(scalar_trajectory({1, 0.01, 1}), kZero, 0.05).has_value());
  // the band is strict
  CHECK_FALSE(iterations_to_converge(scalar_trajectory({0.05}), kZero, 0.05).has_value());
  // infinity norm in several dimensions
  std::vector<Vector> multi{Vector::Constant(3, 0.04), Vector::Constant(3, 0.01)};
  multi[0][2] = 0.2;
  CHECK(iterations_to_converge(multi, Vector::Zero(3), 0.05) == 1u);
  CHECK_THROWS_AS(iterations_to_converge(multi, Vector::Zero(3), 0.0), ContractViolation);
}

TEST_CASE("iterations_to_converge is monotone in the threshold") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vector> traj;
    double x = 3.0 * normal(rng);
    for (int t = 0; t < 60; ++t) {
      x = 0.85 * x + 0.05 * normal(rng);
      traj.push_back(Vector::Constant(1, x));
    }
    std::optional<std::size_t> previous;
    for (double thr : {0.01, 0.02, 0.05, 0.1, 0.3, 1.0, 5.0}) {
      const auto it = iterations_to_converge(traj, kZero, thr);
      if (previous) {
        REQUIRE(it.has_value());
        CHECK(*it <= *previous);
      }
      if (it) previous = it;
    }
  }
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const Summary s = summarize(v);
  CHECK(s.count == 8);
  CHECK(s.mean == 5.0);
  CHECK(s.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(s.se == doctest::Approx(std::sqrt(32.0 / 7.0) / std::sqrt(8.0)));
  CHECK(summarize(std::vector<double>{3.0}).sd == 0.0);
}

TEST_CASE("test_error") {
  const std::vector<int> labels{1, 0, 1, 0};
  CHECK(test_error(std::vector<double>{0.9, 0.1, 0.8, 0.3}, labels) == 0.0);
  CHECK(test_error(std::vector<double>(4, 0.5), labels) == 0.5);
  // rows 2 and 4 are wrong
  CHECK(test_error(std::vector<double>{0.7, 0.2, 0.4, 0.6, 0.51}, std::vector<int>{1, 0, 1, 0, 1}) ==
        doctest::Approx(0.4));
  CHECK(test_error(std::vector<double>{0.5}, std::vector<int>{1}) == 0.0);
  CHECK_THROWS_AS(test_error(std::vector<double>{}, std::vector<int>{}), ContractViolation);
}

TEST_CASE("lppd") {
  const std::vector<int> labels{1, 0, 1};
  CHECK(lppd(std::vector<double>{1.0, 0.0, 1.0}, labels) == 0.0);
  CHECK(lppd(std::vector<double>(3, 0.5), labels) == 3.0 * std::log(0.5));
  CHECK(lppd(std::vector<double>{0.0}, std::vector<int>{1}) == std::log(kLppdProbabilityFloor));
  CHECK_THROWS_AS(lppd(std::vector<double>{}, std::vector<int>{}), ContractViolation);

  SUBCASE("two particles, two rows") {
    Matrix f(2, 1);
    f << 1.0, -2.0;
    const BayesLogReg model(f, {1, 0}, 5.0);
    Particles cloud(2, 1);
    cloud << 0.5, -1.0;
    const auto s = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    // row 1 (label 1): mean of s(0.5), s(-1); row 2 (label 0): mean of 1 - s(-1), 1 - s(2)
    const double expected = std::log(0.5 * (s(0.5) + s(-1.0))) + std::log(0.5 * ((1 - s(-1.0)) + (1 - s(2.0))));
    CHECK(std::abs(lppd(model, cloud, f, {1, 0}) - expected) < 1e-12);
    // averaged p(1): 0.446 on row 1, 0.575 on row 2, so both rows are misclassified
    CHECK(test_error(model, cloud, f, {1, 0}) == 1.0);
  }
}

TEST_CASE("kernel density estimate") {
  const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(kde_1d(std::vector<double>{0.0}, std::vector<double>{0.0}, 0.3)[0] == doctest::Approx(phi0 / 0.3));

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> samples;
    std::normal_distribution<double> normal(1.0, 2.0);
    for (int i = 0; i < 40; ++i) samples.push_back(normal(rng));
    const double bw = silverman_bandwidth(samples);
    const Summary s = summarize(samples);
    const double lo = s.mean - 10 * s.sd, hi = s.mean + 10 * s.sd;
    std::vector<double> grid;
    for (int k = 0; k <= 4000; ++k) grid.push_back(lo + (hi - lo) * k / 4000.0);
    const auto dens = kde_1d(samples, grid, bw);
    double integral = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) integral += 0.5 * (dens[k] + dens[k - 1]) * (grid[k] - grid[k - 1]);
    CHECK(std::abs(integral - 1.0) < 1e-3);
  }

  const std::vector<double> sym{-1.3, 1.3};
  const auto d = kde_1d(sym, std::vector<double>{-0.4, 0.4, -2.0, 2.0}, 0.7);
  CHECK(d[0] == doctest::Approx(d[1]).epsilon(1e-15));
  CHECK(d[2] == doctest::Approx(d[3]).epsilon(1e-15));
  CHECK_THROWS_AS(kde_1d(sym, sym, 0.0), ContractViolation);
  CHECK_THROWS_AS(kde_1d(std::vector<double>{}, sym, 1.0), ContractViolation);
  CHECK(silverman_bandwidth(std::vector<double>{2.0, 2.0}) == 1.0);
}

TEST_CASE("log_spaced grid") {
  const auto g = log_spaced(1e-3, 1e2, 6);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == 1e-3);
  CHECK(g.back() == 1e2);
  CHECK(g[1] == doctest::Approx(1e-2));
  CHECK(log_spaced(0.5, 0.5, 1) == std::vector<double>{0.5});
}

TEST_CASE("parallel_for visits every index and rethrows") {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericFailure("x"); }),
                  NumericFailure);
}

TEST_CASE("grid search on synthetic losses") {
  SUBCASE("single candidate") {
    const std::vector<double> grid{0.3};
    const auto r = grid_search_lr(grid, 2, 0, [](double g, std::uint64_t) { return g * 10; });
    CHECK(r.selected_gamma == 0.3);
    CHECK(r.selected_index == 0);
  }
  SUBCASE("analytic minimum over five points") {
    const std::vector<double> grid{0.01, 0.1, 1.0, 10.0, 100.0};
    // (log10 gamma)^2 plus seed noise that averages to zero over two seeds
    const TrialLoss loss = [](double g, std::uint64_t seed) {
      const double l = std::log10(g);
      return l * l + (seed % 2 == 0 ? 0.01 : -0.01);
    };
    const auto r = grid_search_lr(grid, 2, 10, loss);
    CHECK(r.selected_gamma == 1.0);
    CHECK(r.mean_loss[0] == doctest::Approx(4.0));
  }
  SUBCASE("diverged runs score infinity") {
    const std::vector<double> grid{0.1, 1.0, 10.0};
    const TrialLoss loss = [](double g, std::uint64_t seed) -> double {
      if (g > 5.0 || (g == 0.1 && seed == 1)) throw DivergedError(3);
      return 1.0 / g;
    };
    const auto r = grid_search_lr(grid, 2, 0, loss);
    CHECK(r.diverged == std::vector<bool>{true, false, true});
    CHECK(std::isinf(r.mean_loss[0]));
    CHECK(std::isinf(r.mean_loss[2]));
    CHECK(r.selected_gamma == 1.0);
  }
  SUBCASE("every candidate diverging") {
    const std::vector<double> grid{1.0, 2.0};
    CHECK_THROWS_AS(grid_search_lr(grid, 1, 0, [](double, std::uint64_t) -> double { throw DivergedError(1); }),
                    NoViableStepSize);
  }
  SUBCASE("ties prefer the smaller step size and permutations do not matter") {
    const TrialLoss loss = [](double g, std::uint64_t) { return g < 2.5 ? std::abs(g - 2.0) : std::abs(g - 3.0); };
    std::vector<double> grid{4.0, 3.0, 0.5, 2.0, 1.0};
    const double base = grid_search_lr(grid, 1, 0, loss).selected_gamma;
    CHECK(base == 2.0);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
      std::shuffle(grid.begin(), grid.end(), rng);
      CHECK(grid_search_lr(grid, 1, 0, loss).selected_gamma == base);
    }
  }
  SUBCASE("seeds and threads") {
    std::vector<std::uint64_t> seen;
    std::mutex m;
    const std::vector<double> grid{1.0};
    grid_search_lr(grid, 3, 40, [&](double, std::uint64_t s) {
      std::lock_guard lock(m);
      seen.push_back(s);
      return 0.0;
    });
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<std::uint64_t>{40, 41, 42});
    const std::vector<double> grid2{0.1, 0.2, 0.3, 0.4};
    const TrialLoss noisy = [](double g, std::uint64_t s) { return std::sin(13.0 * g + static_cast<double>(s)); };
    const auto a = grid_search_lr(grid2, 4, 0, noisy, 1);
    const auto b = grid_search_lr(grid2, 4, 0, noisy, 4);
    CHECK(a.mean_loss == b.mean_loss);
  }
}

TEST_CASE("ToyHM step-size sweep has an interior minimum") {
  const auto setup = toy_setup();
  AlgorithmConfig base;
  base.method = Method::SvgdEm;
  base.iterations = 300;
  const auto grid = log_spaced(1e-3, 1e2, 20);
  const auto report = grid_search_lr(base, setup.model, KernelSpec::auto_rbf(), toy_init,
                                     final_mse_loss(Vector::Constant(1, setup.theta_hat)), grid, 3, 0);
  CHECK(report.selected_index > 0);
  CHECK(report.selected_index < grid.size() - 1);
  CHECK(report.diverged.back());
  CHECK(std::isfinite(report.mean_loss.front()));
  CHECK(report.mean_loss.front() > report.mean_loss[report.selected_index]);
}

TEST_CASE("heatmap sweep") {
  const auto setup = toy_setup();
  const Vector hat = Vector::Constant(1, setup.theta_hat);
  const TrialInit init = toy_init(3);
  SweepSetup fixed;
  fixed.config.method = Method::MSvgdEm;
  fixed.config.gamma = 0.3;
  fixed.config.iterations = 600;
  fixed.theta0 = init.theta0;
  const CellEvaluator iterations = [&](const SweepSetup& s) {
    const auto r = run(s.config, setup.model, KernelSpec::auto_rbf(), s.theta0, init.cloud0);
    const auto it = iterations_to_converge(r.theta_trajectory, hat, 0.05);
    return it ? static_cast<double>(*it) : std::numeric_limits<double>::infinity();
  };

  SUBCASE("single cell equals a single run") {
    const SweepAxis rows{SweepParameter::Alpha, {0.5}, 0};
    const SweepAxis cols{SweepParameter::Gamma, {0.3}, 0};
    const auto map = heatmap_sweep(rows, cols, fixed, iterations);
    SweepSetup direct = fixed;
    direct.config.alpha_theta = direct.config.alpha_x = 0.5;
    CHECK(map.at(0, 0) == iterations(direct));
    CHECK(map.row_label == "alpha");
    CHECK(map.column_label == "gamma");
  }
  SUBCASE("momentum converges sooner and the sweep is reproducible") {
    const SweepAxis rows{SweepParameter::Alpha, {0.0, 0.9}, 0};
    const SweepAxis cols{SweepParameter::Iterations, {600}, 0};
    const auto a = heatmap_sweep(rows, cols, fixed, iterations);
    const auto b = heatmap_sweep(rows, cols, fixed, iterations, 2);
    CHECK(a.at(1, 0) < a.at(0, 0));
    CHECK(a.values == b.values);
  }
  SUBCASE("diverged cells are marked") {
    const SweepAxis rows{SweepParameter::Gamma, {0.3, 1e6}, 0};
    const SweepAxis cols{SweepParameter::Theta0, {0.0}, 0};
    const auto map = heatmap_sweep(rows, cols, fixed, iterations);
    CHECK_FALSE(map.diverged[0]);
    CHECK(map.diverged[1]);
    CHECK(std::isinf(map.at(1, 0)));
  }
  SUBCASE("empty axis") {
    const SweepAxis rows{SweepParameter::Alpha, {}, 0};
    const SweepAxis cols{SweepParameter::Gamma, {0.3}, 0};
    CHECK_THROWS_AS(heatmap_sweep(rows, cols, fixed, iterations), ContractViolation);
  }
}
