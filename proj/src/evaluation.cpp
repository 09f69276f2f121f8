#include "ota/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ota/kernels.hpp"

namespace ota {
namespace {

void check_dims(const Factorization& fac, const ProblemInstance& inst) {
  if (fac.precoders.cols() != inst.topology.n_senders ||
      fac.decoders.cols() != inst.topology.n_receivers ||
      fac.precoders.rows() != fac.decoders.rows())
    throw std::invalid_argument("factorization/instance dimension mismatch");
}

// Noiseless received signal, one column per receiver:
// y0(t, j) = sum over connected senders of s_i p_i(t) h_ij.
CMatrix noiseless_signal(const Factorization& fac, const ProblemInstance& inst) {
  CMatrix y0(fac.slots(), inst.topology.n_receivers);
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    const cplx gain = inst.samples.s[static_cast<std::size_t>(i)] * inst.channels.h[k];
    const cplx* pi = fac.precoders.col(i);
    cplx* yj = y0.col(j);
    for (int t = 0; t < fac.slots(); ++t) yj[t] += gain * pi[t];
  }
  return y0;
}

}  // namespace

MseReport analytical_mse(const Factorization& fac, const ProblemInstance& inst) {
  check_dims(fac, inst);
  const int nr = inst.topology.n_receivers;

  CMatrix r;
  kernels::residual(fac.precoders, fac.decoders, inst.weights, r);

  MseReport report;
  report.noise_term =
      inst.noise_var / nr * kernels::frobenius_sq(fac.decoders);

  std::vector<cplx> bias(static_cast<std::size_t>(nr));
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    bias[static_cast<std::size_t>(j)] +=
        inst.samples.s[static_cast<std::size_t>(i)] * inst.channels.h[k] * r(i, j);
    report.max_residual = std::max(report.max_residual, std::abs(r(i, j)));
  }
  double bias_sum = 0.0;
  for (const cplx& b : bias) bias_sum += std::norm(b);
  report.bias_term = bias_sum / nr;
  report.total = report.noise_term + report.bias_term;
  return report;
}

double unbiasedness_residual(const Factorization& fac,
                             const ProblemInstance& inst) {
  check_dims(fac, inst);
  CMatrix r;
  kernels::residual(fac.precoders, fac.decoders, inst.weights, r);
  double worst = 0.0;
  for (const auto& [i, j] : inst.topology.edges)
    worst = std::max(worst, std::abs(r(i, j)));
  return worst;
}

std::vector<double> power_consumption(const Factorization& fac,
                                      const ProblemInstance& inst) {
  check_dims(fac, inst);
  const int ns = inst.topology.n_senders;
  std::vector<double> power(static_cast<std::size_t>(ns));
  for (int i = 0; i < ns; ++i) {
    const cplx* pi = fac.precoders.col(i);
    double norm_sq = 0.0;
    for (int t = 0; t < fac.slots(); ++t) norm_sq += std::norm(pi[t]);
    power[static_cast<std::size_t>(i)] =
        std::norm(inst.samples.s[static_cast<std::size_t>(i)]) * norm_sq;
  }
  return power;
}

namespace {

// Trials per reduction block. Fixed so that the block partial sums, and
// hence the reduced means, are identical for every thread count.
constexpr int kTrialBlock = 4096;

struct BlockSums {
  std::vector<double> x;    // per-receiver sum of squared errors
  std::vector<double> x2;   // per-receiver sum of squared errors, squared
  double z = 0.0;           // sum of per-trial receiver averages
  double z2 = 0.0;
};

// Squared decoding errors of a single trial. Noise draw order is
// receiver-major, slot-minor; the reference implementation repeats it.
void run_trial(const Factorization& fac, const ProblemInstance& inst,
               const CMatrix& y0, const std::vector<cplx>& theta,
               std::uint64_t trial_seed, double sigma,
               std::vector<double>& err_sq) {
  Rng rng(trial_seed);
  const int nr = inst.topology.n_receivers;
  const int slots = fac.slots();
  for (int j = 0; j < nr; ++j) {
    const cplx* qj = fac.decoders.col(j);
    const cplx* yj = y0.col(j);
    cplx estimate{};
    for (int t = 0; t < slots; ++t) {
      const cplx y = yj[t] + sigma * rng.cnormal();
      estimate += qj[t] * y;
    }
    err_sq[static_cast<std::size_t>(j)] =
        std::norm(estimate - theta[static_cast<std::size_t>(j)]);
  }
}

EmpiricalMse finalize(const std::vector<BlockSums>& blocks, int nr,
                      int n_trials) {
  std::vector<double> sum_x(static_cast<std::size_t>(nr), 0.0);
  std::vector<double> sum_x2(static_cast<std::size_t>(nr), 0.0);
  double sum_z = 0.0, sum_z2 = 0.0;
  for (const BlockSums& b : blocks) {
    for (int j = 0; j < nr; ++j) {
      sum_x[static_cast<std::size_t>(j)] += b.x[static_cast<std::size_t>(j)];
      sum_x2[static_cast<std::size_t>(j)] += b.x2[static_cast<std::size_t>(j)];
    }
    sum_z += b.z;
    sum_z2 += b.z2;
  }

  const auto n = static_cast<double>(n_trials);
  EmpiricalMse out;
  out.trials = n_trials;
  out.mean.resize(static_cast<std::size_t>(nr));
  out.std_error.assign(static_cast<std::size_t>(nr), 0.0);
  for (int j = 0; j < nr; ++j) {
    const double mean = sum_x[static_cast<std::size_t>(j)] / n;
    out.mean[static_cast<std::size_t>(j)] = mean;
    if (n_trials > 1) {
      const double var = std::max(
          0.0, (sum_x2[static_cast<std::size_t>(j)] - n * mean * mean) / (n - 1.0));
      out.std_error[static_cast<std::size_t>(j)] = std::sqrt(var / n);
    }
  }
  out.network_mean = sum_z / n;
  if (n_trials > 1) {
    const double var = std::max(
        0.0, (sum_z2 - n * out.network_mean * out.network_mean) / (n - 1.0));
    out.network_std_error = std::sqrt(var / n);
  }
  return out;
}

}  // namespace

EmpiricalMse simulate_transmission(const Factorization& fac,
                                   const ProblemInstance& inst, int n_trials,
                                   Rng& rng) {
  check_dims(fac, inst);
  if (n_trials < 1)
    throw std::invalid_argument("simulate_transmission: n_trials must be >= 1");

  const int nr = inst.topology.n_receivers;
  const CMatrix y0 = noiseless_signal(fac, inst);
  const std::vector<cplx> theta = receiver_targets(inst);
  const double sigma = std::sqrt(inst.noise_var);
  const std::uint64_t base = rng.next();

  const int n_blocks = (n_trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<BlockSums> blocks(static_cast<std::size_t>(n_blocks));

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < n_blocks; ++b) {
    BlockSums sums;
    sums.x.assign(static_cast<std::size_t>(nr), 0.0);
    sums.x2.assign(static_cast<std::size_t>(nr), 0.0);
    std::vector<double> err_sq(static_cast<std::size_t>(nr));
    const int lo = b * kTrialBlock;
    const int hi = std::min(n_trials, lo + kTrialBlock);
    for (int trial = lo; trial < hi; ++trial) {
      run_trial(fac, inst, y0, theta,
                derive_seed({base, static_cast<std::uint64_t>(trial)}), sigma,
                err_sq);
      double z = 0.0;
      for (int j = 0; j < nr; ++j) {
        const double x = err_sq[static_cast<std::size_t>(j)];
        sums.x[static_cast<std::size_t>(j)] += x;
        sums.x2[static_cast<std::size_t>(j)] += x * x;
        z += x;
      }
      z /= nr;
      sums.z += z;
      sums.z2 += z * z;
    }
    blocks[static_cast<std::size_t>(b)] = std::move(sums);
  }

  return finalize(blocks, nr, n_trials);
}

EmpiricalMse simulate_transmission_reference(const Factorization& fac,
                                             const ProblemInstance& inst,
                                             int n_trials, Rng& rng) {
  check_dims(fac, inst);
  if (n_trials < 1)
    throw std::invalid_argument("simulate_transmission: n_trials must be >= 1");

  const int nr = inst.topology.n_receivers;
  const CMatrix y0 = noiseless_signal(fac, inst);
  const std::vector<cplx> theta = receiver_targets(inst);
  const double sigma = std::sqrt(inst.noise_var);
  const std::uint64_t base = rng.next();

  std::vector<double> sum_x(static_cast<std::size_t>(nr), 0.0);
  std::vector<double> sum_x2(static_cast<std::size_t>(nr), 0.0);
  double sum_z = 0.0, sum_z2 = 0.0;
  std::vector<double> err_sq(static_cast<std::size_t>(nr));
  for (int trial = 0; trial < n_trials; ++trial) {
    run_trial(fac, inst, y0, theta,
              derive_seed({base, static_cast<std::uint64_t>(trial)}), sigma,
              err_sq);
    double z = 0.0;
    for (int j = 0; j < nr; ++j) {
      const double x = err_sq[static_cast<std::size_t>(j)];
      sum_x[static_cast<std::size_t>(j)] += x;
      sum_x2[static_cast<std::size_t>(j)] += x * x;
      z += x;
    }
    z /= nr;
    sum_z += z;
    sum_z2 += z * z;
  }

  std::vector<BlockSums> one(1);
  one[0].x = std::move(sum_x);
  one[0].x2 = std::move(sum_x2);
  one[0].z = sum_z;
  one[0].z2 = sum_z2;
  return finalize(one, nr, n_trials);
}

}  // namespace ota
