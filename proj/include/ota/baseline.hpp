#ifndef OTA_BASELINE_HPP
#define OTA_BASELINE_HPP

#include <vector>

#include "ota/network.hpp"

namespace ota {

// One-receiver-per-slot aggregation: N_r slots, slot j serves receiver j
// alone, with every sender's budget split uniformly across its receivers.
struct BaselineResult {
  std::vector<double> eta;                // per-receiver amplitude scaling
  std::vector<double> mse_per_receiver;   // noise_var / eta^2
  std::vector<double> power_used;         // per-sender total over all slots
  double network_mse = 0.0;               // mean over receivers
};

// Largest common amplitude scaling receiver j can support: every connected
// sender i applies precoder eta / (|N_j| h_ij) and must respect
// per_receiver_power, so the worst channel-to-data ratio binds.
double baseline_eta(int receiver, const ProblemInstance& inst,
                    double per_receiver_power);

// Evaluates the whole baseline with per_receiver_power = p_max /
// sender_degree. A sender not connected to receiver j is silent in slot j.
BaselineResult baseline_evaluate(const ProblemInstance& inst,
                                 int sender_degree);

}  // namespace ota

#endif
