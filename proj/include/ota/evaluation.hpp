#ifndef OTA_EVALUATION_HPP
#define OTA_EVALUATION_HPP

#include <vector>

#include "ota/network.hpp"
#include "ota/rng.hpp"
#include "ota/solver.hpp"

namespace ota {

// Analytical error split. For receiver j,
//   E|theta_hat_j - theta_j|^2 = |bias_j|^2 + noise_var * ||q_j||^2
// with bias_j = sum over connected senders of s_i h_ij ((P^T Q)_ij - W_ij).
struct MseReport {
  double noise_term = 0.0;    // (noise_var / N_r) * sum_j ||q_j||^2
  double bias_term = 0.0;     // (1 / N_r) * sum_j |bias_j|^2
  double total = 0.0;         // noise_term + bias_term
  double max_residual = 0.0;  // max over edges of |(P^T Q)_ij - W_ij|
};

MseReport analytical_mse(const Factorization& fac, const ProblemInstance& inst);

// Worst-case deviation from the unbiasedness condition over the edges.
double unbiasedness_residual(const Factorization& fac,
                             const ProblemInstance& inst);

// Transmit power actually spent by each sender: |s_i|^2 ||p_i||^2.
std::vector<double> power_consumption(const Factorization& fac,
                                      const ProblemInstance& inst);

struct EmpiricalMse {
  std::vector<double> mean;       // per-receiver mean of |theta_hat - theta|^2
  std::vector<double> std_error;  // standard error of that mean
  double network_mean = 0.0;      // per-trial receiver average, then mean
  double network_std_error = 0.0;
  int trials = 0;
};

// Monte Carlo transmission simulation: per trial, fresh CN(0, noise_var)
// noise per (receiver, slot), decode, accumulate squared errors. Trials run
// on independent substreams derived from one draw of `rng`, in fixed-size
// blocks whose partial sums are combined in block order, so results do not
// depend on the number of threads.
EmpiricalMse simulate_transmission(const Factorization& fac,
                                   const ProblemInstance& inst, int n_trials,
                                   Rng& rng);

// Serial twin of simulate_transmission, kept for testing: identical
// per-trial draws, plain sequential accumulation.
EmpiricalMse simulate_transmission_reference(const Factorization& fac,
                                             const ProblemInstance& inst,
                                             int n_trials, Rng& rng);

}  // namespace ota

#endif
