#include "ota/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ota/baseline.hpp"
#include "ota/evaluation.hpp"
#include "ota/network.hpp"
#include "ota/solver.hpp"

namespace ota {
namespace {

constexpr const char* kResultsHeader =
    "snr,T,realization,mse_proposed,mse_noise,mse_bias,max_residual,"
    "mse_baseline,iters,wall_ms";
constexpr const char* kPowerHeader = "method,snr,T,realization,sender,power";
constexpr const char* kSummaryHeader =
    "snr,T,mean_proposed,se_proposed,mean_baseline,se_baseline,ratio";
constexpr const char* kMcHeader =
    "snr,T,realization,mse_empirical,se_empirical,mse_analytical,z_score";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::finalize() {
  if (t_values.empty()) {
    t_values.resize(30);
    std::iota(t_values.begin(), t_values.end(), 1);
  }
  if (n_senders < 1 || n_receivers < 1 || sender_degree < 1)
    throw std::invalid_argument("config: network dimensions must be positive");
  if (sender_degree > n_receivers)
    throw std::invalid_argument("config: sender_degree exceeds n_receivers");
  if (snr_values.empty()) throw std::invalid_argument("config: empty snr_values");
  for (double s : snr_values)
    if (!(s > 0.0)) throw std::invalid_argument("config: snr values must be positive");
  for (int t : t_values)
    if (t < 1) throw std::invalid_argument("config: t_values entries must be >= 1");
  if (n_realizations < 1)
    throw std::invalid_argument("config: n_realizations must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (!(p_max > 0.0)) throw std::invalid_argument("config: p_max must be positive");
  if (max_iters < 1 || rel_tol < 0.0 || !(alpha0 > 0.0) || !(init_scale > 0.0))
    throw std::invalid_argument("config: bad solver settings");
  if (mc_trials < 0) throw std::invalid_argument("config: mc_trials must be >= 0");

  if (hist_points.empty()) {
    const int t_max = *std::max_element(t_values.begin(), t_values.end());
    for (double s : snr_values) hist_points.emplace_back(s, t_max);
  }
  for (const auto& [s, t] : hist_points) {
    const bool snr_known =
        std::find(snr_values.begin(), snr_values.end(), s) != snr_values.end();
    const bool t_known =
        std::find(t_values.begin(), t_values.end(), t) != t_values.end();
    if (!snr_known || !t_known)
      throw std::invalid_argument("config: hist_points must lie on the sweep grid");
  }
}

namespace {

void parse_into(const nlohmann::json& doc, ExperimentConfig& cfg) {
  static const std::vector<std::string> known = {
      "n_senders",     "n_receivers",   "sender_degree", "t_values",
      "snr_values",    "n_realizations", "lambda",       "p_max",
      "master_seed",   "max_iters",     "rel_tol",       "alpha0",
      "init_scale",    "edge_mask_only", "mc_trials",    "fixed_topology",
      "record_timings", "save_instances", "hist_points", "output_dir"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }

  cfg.n_senders = doc.value("n_senders", cfg.n_senders);
  cfg.n_receivers = doc.value("n_receivers", cfg.n_receivers);
  cfg.sender_degree = doc.value("sender_degree", cfg.sender_degree);
  if (doc.contains("t_values"))
    cfg.t_values = doc["t_values"].get<std::vector<int>>();
  if (doc.contains("snr_values"))
    cfg.snr_values = doc["snr_values"].get<std::vector<double>>();
  cfg.n_realizations = doc.value("n_realizations", cfg.n_realizations);
  cfg.lambda = doc.value("lambda", cfg.lambda);
  cfg.p_max = doc.value("p_max", cfg.p_max);
  cfg.master_seed = doc.value("master_seed", cfg.master_seed);
  cfg.max_iters = doc.value("max_iters", cfg.max_iters);
  cfg.rel_tol = doc.value("rel_tol", cfg.rel_tol);
  cfg.alpha0 = doc.value("alpha0", cfg.alpha0);
  cfg.init_scale = doc.value("init_scale", cfg.init_scale);
  cfg.edge_mask_only = doc.value("edge_mask_only", cfg.edge_mask_only);
  cfg.mc_trials = doc.value("mc_trials", cfg.mc_trials);
  cfg.fixed_topology = doc.value("fixed_topology", cfg.fixed_topology);
  cfg.record_timings = doc.value("record_timings", cfg.record_timings);
  cfg.save_instances = doc.value("save_instances", cfg.save_instances);
  if (doc.contains("hist_points")) {
    cfg.hist_points.clear();
    for (const auto& e : doc["hist_points"]) {
      if (!e.is_array() || e.size() != 2)
        throw std::invalid_argument("config: hist_points entries must be [snr, T]");
      cfg.hist_points.emplace_back(e[0].get<double>(), e[1].get<int>());
    }
  }
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);
}

}  // namespace

ExperimentConfig load_config(std::istream& in) {
  nlohmann::json doc;
  try {
    // allow_exceptions on, // and /* */ comments tolerated
    doc = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!doc.is_object())
    throw std::invalid_argument("config: top-level document must be an object");
  ExperimentConfig cfg;
  parse_into(doc, cfg);
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  return load_config(in);
}

ExperimentResult run_experiment(const ExperimentConfig& config_in) {
  ExperimentConfig cfg = config_in;
  cfg.finalize();

  const auto n_snr = cfg.snr_values.size();
  const auto n_t = cfg.t_values.size();
  const auto n_real = static_cast<std::size_t>(cfg.n_realizations);

  ExperimentResult result;
  result.config = cfg;
  result.records.resize(n_snr * n_t * n_real);
  if (cfg.mc_trials > 0) result.mc_records.resize(n_snr * n_t * n_real);
  result.power_entries.resize(cfg.hist_points.size() * n_real);
  const auto record_index = [&](std::size_t si, std::size_t ti, std::size_t r) {
    return (si * n_t + ti) * n_real + r;
  };

  // Data samples are drawn once and shared by every realization and sweep
  // point; the topology is per-realization unless pinned.
  const std::uint64_t samples_seed =
      derive_seed(cfg.master_seed, Stream::samples, 0);
  Rng samples_rng(samples_seed);
  const DataSamples shared_samples = draw_samples(cfg.n_senders, samples_rng);

  Topology shared_topology;
  if (cfg.fixed_topology) {
    Rng topo_rng(derive_seed(cfg.master_seed, Stream::topology, 0));
    shared_topology = generate_topology(cfg.n_senders, cfg.n_receivers,
                                        cfg.sender_degree, topo_rng);
  }

  std::filesystem::create_directories(cfg.output_dir);

  std::string failure;
  bool failed = false;

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < cfg.n_realizations; ++r) {
    try {
      const std::uint64_t topo_seed = derive_seed(
          cfg.master_seed, Stream::topology, cfg.fixed_topology ? 0 : r);
      Topology topo;
      if (cfg.fixed_topology) {
        topo = shared_topology;
      } else {
        Rng topo_rng(topo_seed);
        topo = generate_topology(cfg.n_senders, cfg.n_receivers,
                                 cfg.sender_degree, topo_rng);
      }
      const std::uint64_t chan_seed =
          derive_seed(cfg.master_seed, Stream::channels, r);
      Rng chan_rng(chan_seed);
      const ChannelRealization chans = draw_channels(topo, chan_rng);

      for (std::size_t si = 0; si < n_snr; ++si) {
        const double snr = cfg.snr_values[si];
        ProblemInstance inst = build_instance(topo, chans, shared_samples,
                                              cfg.p_max, cfg.p_max / snr);
        inst.seeds = {topo_seed, chan_seed, samples_seed};
        if (cfg.save_instances) {
          std::ostringstream name;
          name << "instance_r" << r << "_snr" << si << ".json";
          save_instance_file(
              (std::filesystem::path(cfg.output_dir) / name.str()).string(),
              inst);
        }

        const BaselineResult base = baseline_evaluate(inst, cfg.sender_degree);

        for (std::size_t ti = 0; ti < n_t; ++ti) {
          const int t = cfg.t_values[ti];
          SolverConfig scfg;
          scfg.lambda = cfg.lambda;
          scfg.alpha0 = cfg.alpha0;
          scfg.max_iters = cfg.max_iters;
          scfg.rel_tol = cfg.rel_tol;
          scfg.init_scale = cfg.init_scale;
          scfg.edge_mask_only = cfg.edge_mask_only;
          Rng init_rng(derive_seed(cfg.master_seed, Stream::solver_init, r,
                                   si, ti));

          ExperimentRecord rec;
          rec.snr = snr;
          rec.t = t;
          rec.realization = r;
          rec.mse_baseline = base.network_mse;

          const auto start = std::chrono::steady_clock::now();
          SolveResult solved;
          bool ok = true;
          try {
            solved = solve(inst, t, scfg, init_rng);
          } catch (const std::runtime_error&) {
            ok = false;
          }
          const auto stop = std::chrono::steady_clock::now();
          if (cfg.record_timings)
            rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              stop - start)
                              .count();

          if (ok) {
            const MseReport mse = analytical_mse(solved.factorization, inst);
            rec.mse_proposed = mse.total;
            rec.mse_noise = mse.noise_term;
            rec.mse_bias = mse.bias_term;
            rec.max_residual = mse.max_residual;
            rec.iters = solved.trace.iterations_run;
          } else {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            rec.mse_proposed = rec.mse_noise = rec.mse_bias = rec.max_residual =
                nan;
            rec.diverged = true;
          }
          result.records[record_index(si, ti, r)] = rec;

          if (ok) {
            for (std::size_t hp = 0; hp < cfg.hist_points.size(); ++hp) {
              if (cfg.hist_points[hp] != std::make_pair(snr, t)) continue;
              PowerHistEntry entry;
              entry.snr = snr;
              entry.t = t;
              entry.realization = r;
              entry.proposed = power_consumption(solved.factorization, inst);
              entry.baseline = base.power_used;
              result.power_entries[hp * n_real + static_cast<std::size_t>(r)] =
                  std::move(entry);
            }
            if (cfg.mc_trials > 0) {
              Rng noise_rng(
                  derive_seed(cfg.master_seed, Stream::noise, r, si, ti));
              const EmpiricalMse emp = simulate_transmission(
                  solved.factorization, inst, cfg.mc_trials, noise_rng);
              McCheckRecord mc;
              mc.snr = snr;
              mc.t = t;
              mc.realization = r;
              mc.mse_empirical = emp.network_mean;
              mc.se_empirical = emp.network_std_error;
              mc.mse_analytical = rec.mse_proposed;
              mc.z_score = emp.network_std_error > 0.0
                               ? (emp.network_mean - rec.mse_proposed) /
                                     emp.network_std_error
                               : 0.0;
              result.mc_records[record_index(si, ti, r)] = mc;
            }
          }
        }
      }
    } catch (const std::exception& e) {
#pragma omp critical
      {
        if (!failed) {
          failed = true;
          failure = e.what();
        }
      }
    }
  }
  if (failed) throw std::runtime_error("run_experiment: " + failure);

  const auto dir = std::filesystem::path(cfg.output_dir);
  {
    std::ofstream out(dir / "results.csv");
    if (!out) throw std::runtime_error("cannot write results.csv");
    write_results_csv(out, result);
  }
  {
    std::ofstream out(dir / "power_hist.csv");
    if (!out) throw std::runtime_error("cannot write power_hist.csv");
    write_power_hist_csv(out, result);
  }
  if (cfg.mc_trials > 0) {
    std::ofstream out(dir / "mc_check.csv");
    if (!out) throw std::runtime_error("cannot write mc_check.csv");
    write_mc_check_csv(out, result);
  }
  return result;
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << kResultsHeader << '\n';
  for (const ExperimentRecord& rec : result.records) {
    out << fmt(rec.snr) << ',' << rec.t << ',' << rec.realization << ','
        << fmt(rec.mse_proposed) << ',' << fmt(rec.mse_noise) << ','
        << fmt(rec.mse_bias) << ',' << fmt(rec.max_residual) << ','
        << fmt(rec.mse_baseline) << ',' << rec.iters << ',' << rec.wall_ms
        << '\n';
  }
}

void write_power_hist_csv(std::ostream& out, const ExperimentResult& result) {
  out << kPowerHeader << '\n';
  for (const PowerHistEntry& entry : result.power_entries) {
    for (std::size_t i = 0; i < entry.proposed.size(); ++i)
      out << "proposed," << fmt(entry.snr) << ',' << entry.t << ','
          << entry.realization << ',' << i << ',' << fmt(entry.proposed[i])
          << '\n';
    for (std::size_t i = 0; i < entry.baseline.size(); ++i)
      out << "baseline," << fmt(entry.snr) << ',' << entry.t << ','
          << entry.realization << ',' << i << ',' << fmt(entry.baseline[i])
          << '\n';
  }
}

void write_mc_check_csv(std::ostream& out, const ExperimentResult& result) {
  out << kMcHeader << '\n';
  for (const McCheckRecord& mc : result.mc_records) {
    out << fmt(mc.snr) << ',' << mc.t << ',' << mc.realization << ','
        << fmt(mc.mse_empirical) << ',' << fmt(mc.se_empirical) << ','
        << fmt(mc.mse_analytical) << ',' << fmt(mc.z_score) << '\n';
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, int line_no) {
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &consumed);
  } catch (const std::exception&) {
    throw std::runtime_error("results.csv line " + std::to_string(line_no) +
                             ": bad numeric field '" + field + "'");
  }
  if (consumed != field.size())
    throw std::runtime_error("results.csv line " + std::to_string(line_no) +
                             ": bad numeric field '" + field + "'");
  return v;
}

struct Accum {
  int n = 0;
  double sum_p = 0.0, sum_p2 = 0.0;
  double sum_b = 0.0, sum_b2 = 0.0;
};

}  // namespace

std::vector<SummaryRow> summarize_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("results.csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader)
    throw std::runtime_error("results.csv line 1: unexpected header");

  std::vector<std::pair<double, int>> order;
  std::vector<Accum> accums;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 10)
      throw std::runtime_error("results.csv line " + std::to_string(line_no) +
                               ": expected 10 fields, got " +
                               std::to_string(fields.size()));
    double parsed[10];
    for (int f = 0; f < 10; ++f) parsed[f] = parse_double(fields[f], line_no);
    const double snr = parsed[0];
    const int t = static_cast<int>(parsed[1]);
    const double mse_p = parsed[3];
    const double mse_b = parsed[7];

    const std::pair<double, int> key{snr, t};
    std::size_t idx = 0;
    for (; idx < order.size(); ++idx)
      if (order[idx] == key) break;
    if (idx == order.size()) {
      order.push_back(key);
      accums.emplace_back();
    }
    Accum& acc = accums[idx];
    ++acc.n;
    acc.sum_p += mse_p;
    acc.sum_p2 += mse_p * mse_p;
    acc.sum_b += mse_b;
    acc.sum_b2 += mse_b * mse_b;
  }
  if (order.empty())
    throw std::runtime_error("results.csv: no data rows");

  std::vector<SummaryRow> rows;
  rows.reserve(order.size());
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const Accum& acc = accums[idx];
    SummaryRow row;
    row.snr = order[idx].first;
    row.t = order[idx].second;
    const auto n = static_cast<double>(acc.n);
    row.mean_proposed = acc.sum_p / n;
    row.mean_baseline = acc.sum_b / n;
    if (acc.n > 1) {
      const double var_p = std::max(
          0.0, (acc.sum_p2 - n * row.mean_proposed * row.mean_proposed) / (n - 1.0));
      const double var_b = std::max(
          0.0, (acc.sum_b2 - n * row.mean_baseline * row.mean_baseline) / (n - 1.0));
      row.se_proposed = std::sqrt(var_p / n);
      row.se_baseline = std::sqrt(var_b / n);
    }
    row.ratio = row.mean_proposed / row.mean_baseline;
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const SummaryRow& row : rows) {
    out << fmt(row.snr) << ',' << row.t << ',' << fmt(row.mean_proposed) << ','
        << fmt(row.se_proposed) << ',' << fmt(row.mean_baseline) << ','
        << fmt(row.se_baseline) << ',' << fmt(row.ratio) << '\n';
  }
}

void print_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << std::setw(10) << "snr" << std::setw(6) << "T" << std::setw(16)
      << "mean_proposed" << std::setw(14) << "se_proposed" << std::setw(16)
      << "mean_baseline" << std::setw(14) << "se_baseline" << std::setw(12)
      << "ratio" << '\n';
  const auto old_flags = out.flags();
  const auto old_prec = out.precision();
  out << std::scientific << std::setprecision(4);
  for (const SummaryRow& row : rows) {
    out << std::setw(10) << std::defaultfloat << row.snr << std::setw(6)
        << row.t << std::scientific << std::setw(16) << row.mean_proposed
        << std::setw(14) << row.se_proposed << std::setw(16)
        << row.mean_baseline << std::setw(14) << row.se_baseline
        << std::setw(12) << row.ratio << '\n';
  }
  out.flags(old_flags);
  out.precision(old_prec);
}

}  // namespace ota
