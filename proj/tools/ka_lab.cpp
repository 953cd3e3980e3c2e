// ka_lab: command-line front end for the mean laboratory.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kubo_ando/experiment.hpp"

int main(int argc, char** argv) {
  kubo_ando::ExperimentConfig config;
  try {
    config.master_seed = kubo_ando::default_master_seed();
  } catch (const kubo_ando::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"Kubo-Ando mean laboratory"};
  app.add_option("command", config.command, "eval | check-order | witness | scan-prop3 | scan-e1 | selftest")
      ->required();
  auto* mean = app.add_option("--mean", config.mean, "mean selector, e.g. geometric, power:0.5, mix:0.3:arithmetic:harmonic");
  app.add_option("--n", config.n, "matrix dimension for generated inputs");
  app.add_option("--trials", config.trials, "number of trials");
  app.add_option("--master-seed", config.master_seed, "master seed (default KA_MASTER_SEED or 1)");
  app.add_option("--A", config.a_path, "matrix JSON for A");
  app.add_option("--B", config.b_path, "matrix JSON for B");
  app.add_option("--P", config.p_path, "projection JSON for the scans");
  app.add_option("--measure", config.measure_path, "measure JSON used for the dual path in eval");
  app.add_option("-o,--output", config.output, "output file (default standard output)");
  app.add_option("--pair", config.pair, "ordered | unordered | congruent-diagonal | mixed");
  app.add_option("--samples", config.samples, "sample budget per ordered check-order trial");
  app.add_option("--jobs", config.jobs, "worker threads; results do not depend on it");
  app.add_flag("--timings", config.timings, "add per-trial wall time to records");
  app.add_option("--tol-limit", config.tol_limit, "limit tolerance for the scans");
  app.add_option("--delta", config.delta, "delta for scan-e1");
  app.add_option("--max-exponent", config.max_exponent, "scan grid runs over s = 2^0 .. 2^max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (config.command == "scan-e1" && mean->count() == 0) config.mean = "mix:0.5:arithmetic:harmonic";
  return kubo_ando::run(config, std::cout, std::cerr);
}
