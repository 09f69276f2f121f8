#include "ota/baseline.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ota {

double baseline_eta(int receiver, const ProblemInstance& inst,
                    double per_receiver_power) {
  if (receiver < 0 || receiver >= inst.topology.n_receivers)
    throw std::invalid_argument("baseline_eta: receiver out of range");
  if (!(per_receiver_power > 0.0))
    throw std::invalid_argument("baseline_eta: power must be positive");

  const auto deg = static_cast<double>(
      inst.topology.neighbors[static_cast<std::size_t>(receiver)].size());
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    if (j != receiver) continue;
    const double ratio = deg * std::abs(inst.channels.h[k]) /
                         std::abs(inst.samples.s[static_cast<std::size_t>(i)]);
    worst = std::min(worst, ratio);
  }
  return std::sqrt(per_receiver_power) * worst;
}

BaselineResult baseline_evaluate(const ProblemInstance& inst,
                                 int sender_degree) {
  if (sender_degree < 1)
    throw std::invalid_argument("baseline_evaluate: sender_degree must be >= 1");
  const int ns = inst.topology.n_senders;
  const int nr = inst.topology.n_receivers;
  const double per_receiver_power = inst.p_max / sender_degree;

  BaselineResult res;
  res.eta.assign(static_cast<std::size_t>(nr),
                 std::numeric_limits<double>::infinity());
  res.mse_per_receiver.resize(static_cast<std::size_t>(nr));
  res.power_used.assign(static_cast<std::size_t>(ns), 0.0);

  // Pass 1: the binding sender fixes eta_j.
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    const auto deg = static_cast<double>(
        inst.topology.neighbors[static_cast<std::size_t>(j)].size());
    const double ratio = deg * std::abs(inst.channels.h[k]) /
                         std::abs(inst.samples.s[static_cast<std::size_t>(i)]);
    res.eta[static_cast<std::size_t>(j)] =
        std::min(res.eta[static_cast<std::size_t>(j)],
                 std::sqrt(per_receiver_power) * ratio);
  }

  // Pass 2: per-sender power, |b_ij s_i|^2 with b_ij = eta_j / (|N_j| h_ij),
  // summed over the slots in which the sender transmits.
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    const auto deg = static_cast<double>(
        inst.topology.neighbors[static_cast<std::size_t>(j)].size());
    const double eta = res.eta[static_cast<std::size_t>(j)];
    const double amp = eta * std::abs(inst.samples.s[static_cast<std::size_t>(i)]) /
                       (deg * std::abs(inst.channels.h[k]));
    res.power_used[static_cast<std::size_t>(i)] += amp * amp;
  }

  double total = 0.0;
  for (int j = 0; j < nr; ++j) {
    const double eta = res.eta[static_cast<std::size_t>(j)];
    res.mse_per_receiver[static_cast<std::size_t>(j)] =
        inst.noise_var / (eta * eta);
    total += res.mse_per_receiver[static_cast<std::size_t>(j)];
  }
  res.network_mse = total / nr;
  return res;
}

}  // namespace ota
