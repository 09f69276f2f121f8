#ifndef OTA_SELFCHECK_HPP
#define OTA_SELFCHECK_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ota/matrix.hpp"
#include "ota/network.hpp"

namespace ota::selfcheck {

// Central finite differences of the penalized objective over every real and
// imaginary coordinate of (p, q), packed like the analytic gradient. This
// path never touches the gradient formulas, so agreement is evidence.
std::pair<CMatrix, CMatrix> fd_gradient(const CMatrix& p, const CMatrix& q,
                                        const CMatrix& w, double lambda,
                                        double h = 1e-6,
                                        const std::vector<std::uint8_t>* mask =
                                            nullptr);

// Normwise relative deviation between the analytic gradient and the finite
// difference one at a random point of the given shape.
double gradient_deviation(int slots, int n_senders, int n_receivers,
                          std::uint64_t seed);

// Small random instance used by the checks.
ProblemInstance random_instance(int n_senders, int n_receivers,
                                int sender_degree, double p_max,
                                double noise_var, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Fast invariant/oracle suite over small instances, printing one line per
// check. Returns false if anything failed.
bool run_all(std::ostream& out, std::uint64_t seed);

}  // namespace ota::selfcheck

#endif
