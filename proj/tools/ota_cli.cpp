// Experiment harness for multi-receiver over-the-air computation.
//
//   ota run        sweep (T, SNR) grids over channel realizations, write CSVs
//   ota summarize  aggregate a results.csv into per-(snr, T) statistics
//   ota check      run the invariant/oracle suite on small instances

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ota/experiment.hpp"
#include "ota/selfcheck.hpp"

namespace {

void set_threads(int threads) {
  if (threads <= 0) return;
#ifdef _OPENMP
  omp_set_num_threads(threads);
#else
  std::cerr << "warning: built without OpenMP, --threads ignored\n";
#endif
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool has_seed,
            const std::string& output_dir) {
  ota::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = ota::load_config_file(config_path);
  } else {
    cfg.finalize();
  }
  if (has_seed) cfg.master_seed = seed;
  if (!output_dir.empty()) cfg.output_dir = output_dir;

  const ota::ExperimentResult result = ota::run_experiment(cfg);

  int diverged = 0;
  for (const auto& rec : result.records) diverged += rec.diverged ? 1 : 0;
  std::cout << "wrote " << result.records.size() << " records to "
            << (std::filesystem::path(cfg.output_dir) / "results.csv").string()
            << '\n';
  if (diverged > 0)
    std::cerr << "warning: " << diverged << " solve(s) diverged (NaN rows)\n";
  return 0;
}

int cmd_summarize(const std::string& results_path, std::string output_dir) {
  std::ifstream in(results_path);
  if (!in) {
    std::cerr << "error: cannot open " << results_path << '\n';
    return 1;
  }
  const auto rows = ota::summarize_results(in);
  ota::print_summary_table(std::cout, rows);

  if (output_dir.empty())
    output_dir = std::filesystem::path(results_path).parent_path().string();
  if (output_dir.empty()) output_dir = ".";
  const auto out_path = std::filesystem::path(output_dir) / "summary.csv";
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path.string() << '\n';
    return 1;
  }
  ota::write_summary_csv(out, rows);
  std::cout << "wrote " << out_path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-slot over-the-air computation experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string output_dir;
  int threads = 0;

  auto* run = app.add_subcommand("run", "run a sweep and write CSV results");
  run->add_option("--config", config_path, "JSON config file (defaults apply)");
  auto* seed_opt = run->add_option("--seed", seed, "override master_seed");
  run->add_option("--output", output_dir, "override output directory");
  run->add_option("--threads", threads, "OpenMP thread count");

  std::string results_path;
  auto* summarize =
      app.add_subcommand("summarize", "aggregate results.csv per (snr, T)");
  summarize->add_option("results", results_path, "path to results.csv")
      ->required();
  summarize->add_option("--output", output_dir,
                        "directory for summary.csv (default: next to input)");

  std::uint64_t check_seed = 20240915;
  auto* check =
      app.add_subcommand("check", "run the invariant/oracle self-check suite");
  check->add_option("--seed", check_seed, "seed for the check instances");
  check->add_option("--threads", threads, "OpenMP thread count");

  CLI11_PARSE(app, argc, argv);

  try {
    set_threads(threads);
    if (run->parsed())
      return cmd_run(config_path, seed, seed_opt->count() > 0, output_dir);
    if (summarize->parsed()) return cmd_summarize(results_path, output_dir);
    if (check->parsed())
      return ota::selfcheck::run_all(std::cout, check_seed) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
