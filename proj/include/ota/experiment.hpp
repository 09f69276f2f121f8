#ifndef OTA_EXPERIMENT_HPP
#define OTA_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ota {

// Sweep configuration. Defaults reproduce the reference setup: a 50x30
// network with sender degree 20, T swept 1..30, SNR in {1, 10, 100},
// lambda 0.1, 100 channel realizations.
struct ExperimentConfig {
  int n_senders = 50;
  int n_receivers = 30;
  int sender_degree = 20;
  std::vector<int> t_values;         // default 1..30, set by finalize()
  std::vector<double> snr_values = {1.0, 10.0, 100.0};
  int n_realizations = 100;
  double lambda = 0.1;
  double p_max = 1.0;                // SNR is realized via noise_var = p_max/snr
  std::uint64_t master_seed = 1;
  int max_iters = 20000;
  double rel_tol = 1e-9;
  double alpha0 = 1e-7;
  double init_scale = 0.1;
  bool edge_mask_only = false;
  int mc_trials = 0;                 // 0 disables Monte Carlo validation
  bool fixed_topology = false;       // one topology for all realizations
  bool record_timings = true;        // false writes wall_ms as 0 so repeated
                                     // runs produce byte-identical files
  bool save_instances = false;
  // (snr, T) points whose per-sender power vectors are dumped for
  // histograms; empty selects every snr at the largest T.
  std::vector<std::pair<double, int>> hist_points;
  std::string output_dir = ".";

  // Fills list defaults and validates; throws std::invalid_argument.
  void finalize();
};

// Parses a JSON config document. Every field is optional; unknown keys are
// rejected. The returned config is finalized.
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

struct ExperimentRecord {
  double snr = 0.0;
  int t = 0;
  int realization = 0;
  double mse_proposed = 0.0;
  double mse_noise = 0.0;
  double mse_bias = 0.0;
  double max_residual = 0.0;
  double mse_baseline = 0.0;
  int iters = 0;
  long long wall_ms = 0;
  bool diverged = false;  // mse_* are NaN when set
};

struct PowerHistEntry {
  double snr = 0.0;
  int t = 0;
  int realization = 0;
  std::vector<double> proposed;  // per sender
  std::vector<double> baseline;  // per sender
};

struct McCheckRecord {
  double snr = 0.0;
  int t = 0;
  int realization = 0;
  double mse_empirical = 0.0;
  double se_empirical = 0.0;
  double mse_analytical = 0.0;
  double z_score = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  // One record per (snr, T, realization), in that nesting order.
  std::vector<ExperimentRecord> records;
  std::vector<PowerHistEntry> power_entries;
  std::vector<McCheckRecord> mc_records;  // empty unless mc_trials > 0
};

// Runs the sweep (realizations in parallel, results gathered in
// deterministic order) and writes results.csv, power_hist.csv and, when
// Monte Carlo validation is on, mc_check.csv into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_results_csv(std::ostream& out, const ExperimentResult& result);
void write_power_hist_csv(std::ostream& out, const ExperimentResult& result);
void write_mc_check_csv(std::ostream& out, const ExperimentResult& result);

struct SummaryRow {
  double snr = 0.0;
  int t = 0;
  double mean_proposed = 0.0;
  double se_proposed = 0.0;
  double mean_baseline = 0.0;
  double se_baseline = 0.0;
  double ratio = 0.0;  // mean_proposed / mean_baseline
};

// Aggregates a results.csv stream per (snr, T). Malformed input is rejected
// with the offending line number; an empty sweep is an error.
std::vector<SummaryRow> summarize_results(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void print_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace ota

#endif
