// kmlab: command-line front end.
//
//   kmlab <predict|simulate|compare|sweep-samples|lower-bound|packing> [options]
//
// Every option can also be given as a key in a --config file (key = value,
// one per line); flags on the command line win. Exit codes: 0 success,
// 1 usage or configuration error, 2 experiment-level acceptance failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "kmlab/harness.hpp"

using namespace kmlab;

int main(int argc, char** argv) {
  CLI::App app{"Symmetrized 2-means laboratory: exact dynamics, simulation and bounds"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "declarative key = value config file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  HarnessConfig cfg;
  app.add_option("--model", cfg.model_file, "JSON model file (default: symmetric unit-variance pair)");
  app.add_option("--mu", cfg.mu, "mean norm of the symmetric pair");
  app.add_option("--dim", cfg.dim, "dimension d");
  app.add_option("--iterations", cfg.iterations, "rounds N");
  app.add_option("--n", cfg.n, "total samples per trial (split evenly across rounds)");
  app.add_option("--init", cfg.init, "random_unit or random_sample");
  app.add_option("--cos2-0", cfg.cos2_0, "starting cos^2 theta (k = 2); 0 picks 1/d or the init strategy");
  app.add_option("--eps", cfg.eps, "predict: stop at cos^2 >= 1 - eps");
  app.add_option("--c0", cfg.c0, "predict: constant in the convergence-time formula");
  app.add_option("--tolerance", cfg.tolerance, "compare: per-round deviation threshold");
  app.add_option("--delta", cfg.delta, "failure probability for finite-sample bounds");
  app.add_option("--samples", cfg.samples_file, "simulate: binary sample file (uint64 d, uint64 n, doubles)");
  app.add_option("--dims", cfg.dims, "sweep grid over d")->delimiter(',');
  app.add_option("--mus", cfg.mus, "sweep grid over mu")->delimiter(',');
  app.add_option("--confidence", cfg.confidence, "sweep: required success fraction");
  app.add_option("--growth-fraction", cfg.growth_fraction, "sweep: target growth 1 + f (g_inf - 1)");
  app.add_option("--n-min", cfg.n_min, "sweep: smallest grid n");
  app.add_option("--n-max", cfg.n_max, "sweep: largest grid n");
  app.add_option("--K", cfg.K, "packing: codebook size");
  app.add_option("--trials", cfg.trials, "trials (or codebooks)");
  app.add_option("--seed", cfg.seed, "root seed");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--workers", cfg.workers, "worker threads (0 = all processors)");

  const std::map<std::string, ExperimentKind> kinds = {
      {"predict", ExperimentKind::Predict},         {"simulate", ExperimentKind::Simulate},
      {"compare", ExperimentKind::Compare},         {"sweep-samples", ExperimentKind::SweepSamples},
      {"lower-bound", ExperimentKind::LowerBound},  {"packing", ExperimentKind::Packing}};
  const std::map<std::string, std::string> help = {
      {"predict", "exact trajectory and predicted convergence time"},
      {"simulate", "seeded finite-sample trials"},
      {"compare", "empirical rounds against the exact recurrence and the progress bound"},
      {"sweep-samples", "empirical sample thresholds over a (d, mu) grid"},
      {"lower-bound", "Fano bound curves and minimax thresholds"},
      {"packing", "random packing codebooks and their certificates"}};
  for (const auto& [name, kind] : kinds) {
    app.add_subcommand(name, help.at(name))->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  cfg.kind = kinds.at(app.get_subcommands().front()->get_name());

  try {
    const int code = run_command(cfg);
    std::cout << "wrote " << (std::filesystem::path(cfg.out) / std::string(to_string(cfg.kind))).string()
              << ".{csv,json}" << (code == 2 ? " (acceptance check failed)" : "") << "\n";
    return code;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
