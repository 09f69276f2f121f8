#ifndef OTA_NETWORK_HPP
#define OTA_NETWORK_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ota/matrix.hpp"
#include "ota/rng.hpp"

namespace ota {

// Channel gains and data samples enter the problem data through a division,
// so draws below this magnitude are rejected and redrawn.
inline constexpr double kMagnitudeFloor = 1e-6;

// Bipartite sender -> receiver connectivity.
struct Topology {
  int n_senders = 0;
  int n_receivers = 0;
  // (sender, receiver) pairs in sender-major order, receivers ascending
  // within a sender. This order is the canonical indexing for per-edge data.
  std::vector<std::pair<int, int>> edges;
  // neighbors[j]: senders connected to receiver j, ascending.
  std::vector<std::vector<int>> neighbors;
};

// Connects every sender to `sender_degree` distinct receivers chosen
// uniformly at random. A draw that leaves some receiver without any sender
// is retried (bounded), since the mean at such a receiver is undefined.
Topology generate_topology(int n_senders, int n_receivers, int sender_degree,
                           Rng& rng);

// Per-edge complex gains, aligned with Topology::edges.
struct ChannelRealization {
  std::vector<cplx> h;
};

// Independent CN(0,1) gain per edge; magnitudes below the floor are redrawn.
ChannelRealization draw_channels(const Topology& topology, Rng& rng);

// One complex information symbol per sender.
struct DataSamples {
  std::vector<cplx> s;
};

// Independent CN(0,1) symbol per sender; magnitudes below the floor redrawn.
DataSamples draw_samples(int n_senders, Rng& rng);

// Seeds that produced an instance, carried for provenance in saved files.
struct InstanceSeeds {
  std::uint64_t topology = 0;
  std::uint64_t channels = 0;
  std::uint64_t samples = 0;
};

struct ProblemInstance {
  Topology topology;
  ChannelRealization channels;
  DataSamples samples;
  // weights(i, j) = 1 / (|N_j| h_ij) on edges, 0 elsewhere.
  CMatrix weights;
  // caps[i]: squared-norm budget for sender i's precoder column,
  // p_max / |s_i|^2.
  std::vector<double> caps;
  // Column-major n_senders x n_receivers, nonzero on edges.
  std::vector<std::uint8_t> edge_mask;
  double noise_var = 0.0;
  double p_max = 0.0;
  InstanceSeeds seeds;
};

ProblemInstance build_instance(Topology topology, ChannelRealization channels,
                               DataSamples samples, double p_max,
                               double noise_var);

// Per-receiver target: arithmetic mean of the connected senders' samples.
std::vector<cplx> receiver_targets(const ProblemInstance& inst);

// JSON document with the primary data (dimensions, edge list, complex
// entries as [re, im] pairs, seeds); weights and caps are rebuilt on load.
// Field names are documented in the README.
void save_instance(std::ostream& out, const ProblemInstance& inst);
ProblemInstance load_instance(std::istream& in);
void save_instance_file(const std::string& path, const ProblemInstance& inst);
ProblemInstance load_instance_file(const std::string& path);

}  // namespace ota

#endif
