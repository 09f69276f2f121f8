#include "ota/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace ota {
namespace {

constexpr int kTopologyRetries = 100;

cplx draw_above_floor(Rng& rng) {
  for (;;) {
    const cplx z = rng.cnormal();
    if (std::abs(z) >= kMagnitudeFloor) return z;
  }
}

}  // namespace

Topology generate_topology(int n_senders, int n_receivers, int sender_degree,
                           Rng& rng) {
  if (n_senders < 1 || n_receivers < 1 || sender_degree < 1)
    throw std::invalid_argument("generate_topology: dimensions must be positive");
  if (sender_degree > n_receivers)
    throw std::invalid_argument(
        "generate_topology: sender_degree exceeds receiver count");

  std::vector<int> pool(static_cast<std::size_t>(n_receivers));
  for (int attempt = 0; attempt < kTopologyRetries; ++attempt) {
    Topology topo;
    topo.n_senders = n_senders;
    topo.n_receivers = n_receivers;
    topo.neighbors.assign(static_cast<std::size_t>(n_receivers), {});
    topo.edges.reserve(static_cast<std::size_t>(n_senders) * sender_degree);

    for (int i = 0; i < n_senders; ++i) {
      // Partial Fisher-Yates: the first sender_degree entries of the pool
      // are a uniform random subset of the receivers.
      std::iota(pool.begin(), pool.end(), 0);
      for (int k = 0; k < sender_degree; ++k) {
        const auto pick =
            k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_receivers - k)));
        std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
      }
      std::sort(pool.begin(), pool.begin() + sender_degree);
      for (int k = 0; k < sender_degree; ++k) {
        const int j = pool[static_cast<std::size_t>(k)];
        topo.edges.emplace_back(i, j);
        topo.neighbors[static_cast<std::size_t>(j)].push_back(i);
      }
    }

    const bool isolated =
        std::any_of(topo.neighbors.begin(), topo.neighbors.end(),
                    [](const std::vector<int>& n) { return n.empty(); });
    if (!isolated) return topo;
  }
  throw std::runtime_error(
      "generate_topology: a receiver stayed isolated after " +
      std::to_string(kTopologyRetries) + " attempts");
}

ChannelRealization draw_channels(const Topology& topology, Rng& rng) {
  ChannelRealization ch;
  ch.h.reserve(topology.edges.size());
  for (std::size_t k = 0; k < topology.edges.size(); ++k)
    ch.h.push_back(draw_above_floor(rng));
  return ch;
}

DataSamples draw_samples(int n_senders, Rng& rng) {
  if (n_senders < 1)
    throw std::invalid_argument("draw_samples: n_senders must be positive");
  DataSamples ds;
  ds.s.reserve(static_cast<std::size_t>(n_senders));
  for (int i = 0; i < n_senders; ++i) ds.s.push_back(draw_above_floor(rng));
  return ds;
}

ProblemInstance build_instance(Topology topology, ChannelRealization channels,
                               DataSamples samples, double p_max,
                               double noise_var) {
  const int ns = topology.n_senders;
  const int nr = topology.n_receivers;
  if (channels.h.size() != topology.edges.size())
    throw std::invalid_argument("build_instance: channel/edge count mismatch");
  if (samples.s.size() != static_cast<std::size_t>(ns))
    throw std::invalid_argument("build_instance: sample/sender count mismatch");
  if (!(p_max > 0.0) || !(noise_var > 0.0))
    throw std::invalid_argument("build_instance: p_max and noise_var must be positive");

  ProblemInstance inst;
  inst.weights = CMatrix(ns, nr);
  inst.edge_mask.assign(static_cast<std::size_t>(ns) * static_cast<std::size_t>(nr), 0);
  for (std::size_t k = 0; k < topology.edges.size(); ++k) {
    const auto [i, j] = topology.edges[k];
    const cplx h = channels.h[k];
    if (std::abs(h) < kMagnitudeFloor)
      throw std::invalid_argument("build_instance: channel gain below magnitude floor");
    const auto deg = static_cast<double>(topology.neighbors[static_cast<std::size_t>(j)].size());
    inst.weights(i, j) = 1.0 / (deg * h);
    inst.edge_mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(ns) +
                   static_cast<std::size_t>(i)] = 1;
  }

  inst.caps.resize(static_cast<std::size_t>(ns));
  for (int i = 0; i < ns; ++i) {
    const double mag_sq = std::norm(samples.s[static_cast<std::size_t>(i)]);
    if (mag_sq < kMagnitudeFloor * kMagnitudeFloor)
      throw std::invalid_argument("build_instance: data sample below magnitude floor");
    inst.caps[static_cast<std::size_t>(i)] = p_max / mag_sq;
  }

  inst.topology = std::move(topology);
  inst.channels = std::move(channels);
  inst.samples = std::move(samples);
  inst.noise_var = noise_var;
  inst.p_max = p_max;
  return inst;
}

std::vector<cplx> receiver_targets(const ProblemInstance& inst) {
  std::vector<cplx> theta(static_cast<std::size_t>(inst.topology.n_receivers));
  for (int j = 0; j < inst.topology.n_receivers; ++j) {
    const auto& nbrs = inst.topology.neighbors[static_cast<std::size_t>(j)];
    cplx acc{};
    for (int i : nbrs) acc += inst.samples.s[static_cast<std::size_t>(i)];
    theta[static_cast<std::size_t>(j)] = acc / static_cast<double>(nbrs.size());
  }
  return theta;
}

namespace {

nlohmann::json complex_list(const std::vector<cplx>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (const cplx& z : v) arr.push_back({z.real(), z.imag()});
  return arr;
}

std::vector<cplx> parse_complex_list(const nlohmann::json& arr) {
  std::vector<cplx> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2)
      throw std::runtime_error("instance file: complex entries must be [re, im]");
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

}  // namespace

void save_instance(std::ostream& out, const ProblemInstance& inst) {
  nlohmann::json doc;
  doc["format"] = "ota-instance/1";
  doc["n_senders"] = inst.topology.n_senders;
  doc["n_receivers"] = inst.topology.n_receivers;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : inst.topology.edges) edges.push_back({i, j});
  doc["edges"] = std::move(edges);
  doc["channels"] = complex_list(inst.channels.h);
  doc["samples"] = complex_list(inst.samples.s);
  doc["p_max"] = inst.p_max;
  doc["noise_var"] = inst.noise_var;
  doc["seeds"] = {{"topology", inst.seeds.topology},
                  {"channels", inst.seeds.channels},
                  {"samples", inst.seeds.samples}};
  out << doc.dump(2) << '\n';
}

ProblemInstance load_instance(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("instance file: ") + e.what());
  }
  if (doc.value("format", "") != "ota-instance/1")
    throw std::runtime_error("instance file: unknown or missing format tag");

  Topology topo;
  topo.n_senders = doc.at("n_senders").get<int>();
  topo.n_receivers = doc.at("n_receivers").get<int>();
  if (topo.n_senders < 1 || topo.n_receivers < 1)
    throw std::runtime_error("instance file: dimensions must be positive");
  topo.neighbors.assign(static_cast<std::size_t>(topo.n_receivers), {});
  std::set<std::pair<int, int>> seen;
  for (const auto& e : doc.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw std::runtime_error("instance file: edges must be [sender, receiver]");
    const int i = e[0].get<int>();
    const int j = e[1].get<int>();
    if (i < 0 || i >= topo.n_senders || j < 0 || j >= topo.n_receivers)
      throw std::runtime_error("instance file: edge endpoint out of range");
    if (!seen.insert({i, j}).second)
      throw std::runtime_error("instance file: duplicate edge");
    topo.edges.emplace_back(i, j);
    topo.neighbors[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& nbrs : topo.neighbors) {
    if (nbrs.empty())
      throw std::runtime_error("instance file: receiver without any sender");
    std::sort(nbrs.begin(), nbrs.end());
  }

  ChannelRealization ch;
  ch.h = parse_complex_list(doc.at("channels"));
  DataSamples ds;
  ds.s = parse_complex_list(doc.at("samples"));

  auto inst = build_instance(std::move(topo), std::move(ch), std::move(ds),
                             doc.at("p_max").get<double>(),
                             doc.at("noise_var").get<double>());
  if (doc.contains("seeds")) {
    const auto& seeds = doc["seeds"];
    inst.seeds.topology = seeds.value("topology", std::uint64_t{0});
    inst.seeds.channels = seeds.value("channels", std::uint64_t{0});
    inst.seeds.samples = seeds.value("samples", std::uint64_t{0});
  }
  return inst;
}

void save_instance_file(const std::string& path, const ProblemInstance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  save_instance(out, inst);
}

ProblemInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return load_instance(in);
}

}  // namespace ota
