#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "msvgd/errors.hpp"
#include "msvgd/experiment.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string output_dir;
  int threads = 1;
  std::uint64_t seed_offset = 0;
  std::uint64_t selftest_seed = 0;
};

msvgd::ExperimentConfig prepare(const Options& opts) {
  msvgd::ExperimentConfig config = msvgd::load_config(opts.config_path);
  if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
  for (auto& s : config.seeds) s += opts.seed_offset;
  return config;
}

int cmd_run(const Options& opts) {
  const auto config = prepare(opts);
  const auto result = msvgd::run_experiment(config, opts.threads);
  msvgd::write_artifacts(result);
  std::size_t diverged = 0;
  for (const auto& r : result.runs) diverged += r.diverged ? 1 : 0;
  std::cout << "wrote " << config.output_dir.string() << " (" << result.runs.size() << " runs, " << diverged
            << " diverged)\n";
  return 0;
}

int cmd_gridsearch(const Options& opts) {
  const auto config = prepare(opts);
  const auto result = msvgd::run_gridsearch(config, opts.threads);
  msvgd::write_artifacts(result);
  for (const auto& [label, report] : result.reports) {
    if (report.selected_index >= report.grid.size())
      std::cout << label << ": every step size diverged\n";
    else
      std::printf("%s: gamma %.6g (loss %.6g)\n", label.c_str(), report.selected_gamma,
                  report.mean_loss[report.selected_index]);
  }
  return 0;
}

int cmd_selftest(const Options& opts) {
  bool ok = true;
  for (const auto& line : msvgd::run_selftest(opts.selftest_seed)) {
    std::cout << (line.passed ? "PASS " : "FAIL ") << line.name << " [" << line.detail << "]\n";
    ok = ok && line.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Momentum SVGD-EM experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  app.add_option("--output-dir", opts.output_dir, "Override the configured output directory");
  app.add_option("--threads", opts.threads, "Worker threads for seeds and grid cells")->check(CLI::PositiveNumber);
  app.add_option("--seed-offset", opts.seed_offset, "Added to every configured seed");

  auto* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
  run->add_option("config", opts.config_path, "JSON configuration")->required();
  auto* grid = app.add_subcommand("gridsearch", "Learning-rate grid search for every configured method");
  grid->add_option("config", opts.config_path, "JSON configuration")->required();
  auto* self = app.add_subcommand("selftest", "Derivation-equivalence and gradient checks");
  self->add_option("--seed", opts.selftest_seed, "Seed for the random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(opts);
    if (grid->parsed()) return cmd_gridsearch(opts);
    if (self->parsed()) return cmd_selftest(opts);
  } catch (const msvgd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
