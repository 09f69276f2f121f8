#include "ota/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "ota/baseline.hpp"
#include "ota/evaluation.hpp"
#include "ota/solver.hpp"

namespace ota::selfcheck {
namespace {

CMatrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = scale * rng.cnormal();
  return m;
}

}  // namespace

std::pair<CMatrix, CMatrix> fd_gradient(const CMatrix& p, const CMatrix& q,
                                        const CMatrix& w, double lambda,
                                        double h,
                                        const std::vector<std::uint8_t>* mask) {
  const auto value = [&](const CMatrix& pp, const CMatrix& qq) {
    return objective_raw(pp, qq, w, lambda, mask);
  };
  const auto diff_matrix = [&](const CMatrix& m,
                               const std::function<double(const CMatrix&)>& f) {
    CMatrix g(m.rows(), m.cols());
    CMatrix probe = m;
    for (int c = 0; c < m.cols(); ++c) {
      for (int r = 0; r < m.rows(); ++r) {
        const cplx original = probe(r, c);
        probe(r, c) = original + cplx{h, 0.0};
        const double f_re_plus = f(probe);
        probe(r, c) = original - cplx{h, 0.0};
        const double f_re_minus = f(probe);
        probe(r, c) = original + cplx{0.0, h};
        const double f_im_plus = f(probe);
        probe(r, c) = original - cplx{0.0, h};
        const double f_im_minus = f(probe);
        probe(r, c) = original;
        g(r, c) = cplx{(f_re_plus - f_re_minus) / (2.0 * h),
                       (f_im_plus - f_im_minus) / (2.0 * h)};
      }
    }
    return g;
  };

  CMatrix gp = diff_matrix(p, [&](const CMatrix& m) { return value(m, q); });
  CMatrix gq = diff_matrix(q, [&](const CMatrix& m) { return value(p, m); });
  return {std::move(gp), std::move(gq)};
}

double gradient_deviation(int slots, int n_senders, int n_receivers,
                          std::uint64_t seed) {
  Rng rng(seed);
  const CMatrix p = random_matrix(slots, n_senders, rng);
  const CMatrix q = random_matrix(slots, n_receivers, rng);
  const CMatrix w = random_matrix(n_senders, n_receivers, rng);
  const double lambda = 0.1;

  const auto [gp, gq] = gradient_raw(p, q, w, lambda);
  const auto [fp, fq] = fd_gradient(p, q, w, lambda);

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < gp.size(); ++k) {
    num += std::norm(gp.data()[k] - fp.data()[k]);
    den += std::norm(fp.data()[k]);
  }
  for (std::size_t k = 0; k < gq.size(); ++k) {
    num += std::norm(gq.data()[k] - fq.data()[k]);
    den += std::norm(fq.data()[k]);
  }
  return std::sqrt(num) / std::max(1.0, std::sqrt(den));
}

ProblemInstance random_instance(int n_senders, int n_receivers,
                                int sender_degree, double p_max,
                                double noise_var, std::uint64_t seed) {
  Rng rng(derive_seed({seed, 0x746f706fULL}));
  Topology topo = generate_topology(n_senders, n_receivers, sender_degree, rng);
  Rng chan_rng(derive_seed({seed, 0x6368616eULL}));
  ChannelRealization ch = draw_channels(topo, chan_rng);
  Rng samp_rng(derive_seed({seed, 0x73616d70ULL}));
  DataSamples ds = draw_samples(n_senders, samp_rng);
  return build_instance(std::move(topo), std::move(ch), std::move(ds), p_max,
                        noise_var);
}

namespace {

using Check = std::function<CheckResult()>;

CheckResult check_gradient(std::uint64_t seed) {
  double worst = 0.0;
  const int shapes[][3] = {{1, 1, 1}, {3, 5, 4}, {8, 12, 7}};
  for (int s = 0; s < 3; ++s)
    for (int rep = 0; rep < 5; ++rep)
      worst = std::max(worst,
                       gradient_deviation(shapes[s][0], shapes[s][1],
                                          shapes[s][2],
                                          derive_seed({seed, 1, (std::uint64_t)s,
                                                       (std::uint64_t)rep})));
  std::ostringstream detail;
  detail << "max relative deviation " << worst;
  return {"gradient-vs-finite-difference", worst < 1e-6, detail.str()};
}

CheckResult check_projection(std::uint64_t seed) {
  Rng rng(derive_seed({seed, 2}));
  bool ok = true;
  std::ostringstream detail;
  for (int rep = 0; rep < 200 && ok; ++rep) {
    const int rows = 1 + static_cast<int>(rng.below(8));
    CMatrix a = random_matrix(rows, 1, rng, 2.0);
    CMatrix b = random_matrix(rows, 1, rng, 2.0);
    const std::vector<double> cap = {rng.uniform() * 4.0};
    const CMatrix pa = project(a, cap);
    const CMatrix pb = project(b, cap);
    const CMatrix paa = project(pa, cap);

    double norm_pa = 0.0, move = 0.0, dist_proj = 0.0, dist = 0.0;
    for (int t = 0; t < rows; ++t) {
      norm_pa += std::norm(pa(t, 0));
      move += std::norm(paa(t, 0) - pa(t, 0));
      dist_proj += std::norm(pa(t, 0) - pb(t, 0));
      dist += std::norm(a(t, 0) - b(t, 0));
    }
    if (norm_pa > cap[0] * (1.0 + 1e-12)) {
      ok = false;
      detail << "feasibility violated at rep " << rep;
    } else if (move > 1e-28 * std::max(1.0, norm_pa)) {
      ok = false;
      detail << "idempotence violated at rep " << rep;
    } else if (dist_proj > dist * (1.0 + 1e-12)) {
      ok = false;
      detail << "non-expansiveness violated at rep " << rep;
    }
  }
  if (ok) detail << "feasible, idempotent, non-expansive on 200 columns";
  return {"projection-properties", ok, detail.str()};
}

CheckResult check_instance(std::uint64_t seed) {
  const ProblemInstance inst = random_instance(12, 6, 3, 1.0, 0.1, seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    const auto deg = static_cast<double>(
        inst.topology.neighbors[static_cast<std::size_t>(j)].size());
    const cplx prod = inst.weights(i, j) * inst.channels.h[k] * deg;
    worst = std::max(worst, std::abs(prod - cplx{1.0, 0.0}));
  }
  std::ostringstream detail;
  detail << "max |w*h*deg - 1| = " << worst;
  return {"instance-weight-identity", worst < 1e-12, detail.str()};
}

CheckResult check_ridge(std::uint64_t seed) {
  const ProblemInstance inst = random_instance(10, 6, 3, 1.0, 0.1, seed);
  SolverConfig cfg;
  cfg.optimize_precoders = false;
  cfg.max_iters = 20000;
  Rng rng(derive_seed({seed, 3}));
  const SolveResult res = solve(inst, 5, cfg, rng);
  const CMatrix oracle =
      ridge_decoders(res.factorization.precoders, inst, cfg.lambda);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    num += std::norm(res.factorization.decoders.data()[k] - oracle.data()[k]);
    den += std::norm(oracle.data()[k]);
  }
  const double rel = std::sqrt(num / den);
  std::ostringstream detail;
  detail << "relative error vs closed form " << rel;
  return {"frozen-precoder-ridge-solution", rel < 1e-4, detail.str()};
}

CheckResult check_baseline(std::uint64_t seed) {
  const ProblemInstance inst = random_instance(12, 6, 3, 1.0, 0.1, seed);
  const BaselineResult base = baseline_evaluate(inst, 3);
  const double per_slot_cap = inst.p_max / 3;

  // Per-slot powers: the binding sender must sit exactly at the cap and
  // nobody above it.
  bool ok = true;
  std::ostringstream detail;
  for (int j = 0; j < inst.topology.n_receivers && ok; ++j) {
    double max_power = 0.0;
    for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
      const auto [i, jj] = inst.topology.edges[k];
      if (jj != j) continue;
      const auto deg = static_cast<double>(
          inst.topology.neighbors[static_cast<std::size_t>(j)].size());
      const double amp =
          base.eta[static_cast<std::size_t>(j)] *
          std::abs(inst.samples.s[static_cast<std::size_t>(i)]) /
          (deg * std::abs(inst.channels.h[k]));
      max_power = std::max(max_power, amp * amp);
    }
    if (std::abs(max_power - per_slot_cap) > 1e-12 * per_slot_cap) {
      ok = false;
      detail << "receiver " << j << " slot max power " << max_power
             << " != cap " << per_slot_cap;
    }
  }
  for (double p : base.power_used)
    if (p > inst.p_max * (1.0 + 1e-12)) {
      ok = false;
      detail << "total sender power above budget";
    }
  if (ok) detail << "binding sender at cap in every slot, budgets respected";
  return {"baseline-bottleneck-at-cap", ok, detail.str()};
}

CheckResult check_monte_carlo(std::uint64_t seed) {
  const ProblemInstance inst = random_instance(8, 4, 2, 1.0, 0.05, seed);
  SolverConfig cfg;
  cfg.max_iters = 5000;
  Rng rng(derive_seed({seed, 4}));
  const SolveResult res = solve(inst, 3, cfg, rng);
  const MseReport report = analytical_mse(res.factorization, inst);
  Rng noise_rng(derive_seed({seed, 5}));
  const EmpiricalMse emp =
      simulate_transmission(res.factorization, inst, 20000, noise_rng);
  const double z = (emp.network_mean - report.total) / emp.network_std_error;
  std::ostringstream detail;
  detail << "z-score " << z << " (analytical " << report.total
         << ", empirical " << emp.network_mean << ")";
  return {"monte-carlo-vs-analytical", std::abs(z) < 3.0, detail.str()};
}

CheckResult check_determinism(std::uint64_t seed) {
  const ProblemInstance inst = random_instance(8, 4, 2, 1.0, 0.1, seed);
  SolverConfig cfg;
  cfg.max_iters = 500;
  Rng rng_a(derive_seed({seed, 6}));
  Rng rng_b(derive_seed({seed, 6}));
  const SolveResult a = solve(inst, 3, cfg, rng_a);
  const SolveResult b = solve(inst, 3, cfg, rng_b);
  const bool ok = a.factorization.precoders == b.factorization.precoders &&
                  a.factorization.decoders == b.factorization.decoders &&
                  a.trace.objective_history == b.trace.objective_history;
  return {"solve-determinism", ok,
          ok ? "identical iterates for identical seeds" : "results differ"};
}

}  // namespace

bool run_all(std::ostream& out, std::uint64_t seed) {
  const Check checks[] = {
      [&] { return check_gradient(seed); },
      [&] { return check_projection(seed); },
      [&] { return check_instance(seed); },
      [&] { return check_ridge(seed); },
      [&] { return check_baseline(seed); },
      [&] { return check_monte_carlo(seed); },
      [&] { return check_determinism(seed); },
  };
  bool all_pass = true;
  for (const Check& check : checks) {
    const CheckResult result = check();
    out << (result.pass ? "[PASS] " : "[FAIL] ") << result.name << ": "
        << result.detail << '\n';
    all_pass = all_pass && result.pass;
  }
  return all_pass;
}

}  // namespace ota::selfcheck
