#include <cmath>

#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ota/evaluation.hpp"
#include "ota/kernels.hpp"
#include "ota/selfcheck.hpp"
#include "ota/solver.hpp"

using namespace ota;

namespace {

// P, Q with P^T Q == W exactly on the given instance (T >= n_senders).
Factorization exact_factorization(const ProblemInstance& inst, int slots) {
  Factorization fac;
  fac.precoders = CMatrix(slots, inst.topology.n_senders);
  for (int i = 0; i < inst.topology.n_senders; ++i)
    fac.precoders(i, i) = cplx{1.0, 0.0};
  fac.decoders = CMatrix(slots, inst.topology.n_receivers);
  for (int j = 0; j < inst.topology.n_receivers; ++j)
    for (int i = 0; i < inst.topology.n_senders; ++i)
      fac.decoders(i, j) = inst.weights(i, j);
  return fac;
}

Factorization random_factorization(const ProblemInstance& inst, int slots,
                                   std::uint64_t seed) {
  Rng rng(seed);
  Factorization fac;
  fac.precoders = CMatrix(slots, inst.topology.n_senders);
  fac.decoders = CMatrix(slots, inst.topology.n_receivers);
  for (std::size_t k = 0; k < fac.precoders.size(); ++k)
    fac.precoders.data()[k] = 0.3 * rng.cnormal();
  for (std::size_t k = 0; k < fac.decoders.size(); ++k)
    fac.decoders.data()[k] = 0.3 * rng.cnormal();
  fac.precoders = project(std::move(fac.precoders), inst.caps);
  return fac;
}

}  // namespace

TEST_CASE("exact factorization: total MSE reduces to the decoder noise term") {
  const ProblemInstance inst = selfcheck::random_instance(5, 3, 2, 1.0, 0.2, 41);
  const Factorization fac = exact_factorization(inst, 5);
  const MseReport report = analytical_mse(fac, inst);

  CHECK(report.max_residual < 1e-14);
  CHECK(report.bias_term < 1e-27);
  const double eq9 =
      inst.noise_var / 3 * kernels::frobenius_sq(fac.decoders);
  CHECK(report.total == doctest::Approx(eq9).epsilon(1e-12));
  CHECK(unbiasedness_residual(fac, inst) < 1e-14);
}

TEST_CASE("zero decoders: error is the target itself") {
  const ProblemInstance inst = selfcheck::random_instance(6, 4, 3, 1.0, 0.2, 42);
  Factorization fac = random_factorization(inst, 3, 43);
  fac.decoders.set_zero();
  const MseReport report = analytical_mse(fac, inst);

  CHECK(report.noise_term == 0.0);
  const auto theta = receiver_targets(inst);
  double expect = 0.0;
  for (const cplx& t : theta) expect += std::norm(t);
  expect /= 4;
  CHECK(report.bias_term == doctest::Approx(expect).epsilon(1e-12));

  // Residual of the zero decoder is the weight itself.
  double max_w = 0.0;
  for (const auto& [i, j] : inst.topology.edges)
    max_w = std::max(max_w, std::abs(inst.weights(i, j)));
  CHECK(unbiasedness_residual(fac, inst) ==
        doctest::Approx(max_w).epsilon(1e-15));
}

TEST_CASE("doubling the noise variance doubles only the noise term") {
  const ProblemInstance inst = selfcheck::random_instance(6, 4, 3, 1.0, 0.2, 44);
  const Factorization fac = random_factorization(inst, 3, 45);
  ProblemInstance louder = inst;
  louder.noise_var *= 2.0;

  const MseReport a = analytical_mse(fac, inst);
  const MseReport b = analytical_mse(fac, louder);
  CHECK(b.noise_term == doctest::Approx(2.0 * a.noise_term).epsilon(1e-15));
  CHECK(b.bias_term == a.bias_term);
  CHECK(a.total == a.noise_term + a.bias_term);
  CHECK(b.total == b.noise_term + b.bias_term);
}

TEST_CASE("conjugating the whole problem leaves every MSE value unchanged") {
  const ProblemInstance inst = selfcheck::random_instance(6, 4, 3, 1.0, 0.2, 46);
  const Factorization fac = random_factorization(inst, 3, 47);

  ProblemInstance conj_inst = inst;
  for (auto& h : conj_inst.channels.h) h = std::conj(h);
  for (auto& s : conj_inst.samples.s) s = std::conj(s);
  for (std::size_t k = 0; k < conj_inst.weights.size(); ++k)
    conj_inst.weights.data()[k] = std::conj(conj_inst.weights.data()[k]);
  Factorization conj_fac = fac;
  for (std::size_t k = 0; k < conj_fac.precoders.size(); ++k)
    conj_fac.precoders.data()[k] = std::conj(conj_fac.precoders.data()[k]);
  for (std::size_t k = 0; k < conj_fac.decoders.size(); ++k)
    conj_fac.decoders.data()[k] = std::conj(conj_fac.decoders.data()[k]);

  const MseReport a = analytical_mse(fac, inst);
  const MseReport b = analytical_mse(conj_fac, conj_inst);
  CHECK(a.noise_term == b.noise_term);
  CHECK(a.bias_term == b.bias_term);
  CHECK(a.total == b.total);
  CHECK(a.max_residual == b.max_residual);
}

TEST_CASE("near-exact ridge decoders keep the residual small") {
  // With T >= n_senders and vanishing penalty the ridge solution
  // approaches exact interpolation.
  const ProblemInstance inst = selfcheck::random_instance(4, 3, 2, 1.0, 0.1, 48);
  Rng rng(49);
  Factorization fac;
  fac.precoders = CMatrix(6, 4);
  for (std::size_t k = 0; k < fac.precoders.size(); ++k)
    fac.precoders.data()[k] = rng.cnormal();
  fac.decoders = ridge_decoders(fac.precoders, inst, 1e-8);
  CHECK(unbiasedness_residual(fac, inst) < 1e-3);
}

TEST_CASE("power consumption: boundary column spends exactly p_max") {
  const ProblemInstance inst = selfcheck::random_instance(5, 3, 2, 1.0, 0.1, 50);
  Factorization fac = random_factorization(inst, 4, 51);
  // Push column 0 onto its ball boundary.
  double norm_sq = 0.0;
  for (int t = 0; t < 4; ++t) norm_sq += std::norm(fac.precoders(t, 0));
  const double scale = std::sqrt(inst.caps[0] / norm_sq);
  for (int t = 0; t < 4; ++t) fac.precoders(t, 0) *= scale;

  const auto power = power_consumption(fac, inst);
  CHECK(power[0] == doctest::Approx(inst.p_max).epsilon(1e-12));
  for (double v : power) CHECK(v <= inst.p_max * (1.0 + 1e-12));

  Factorization silent = fac;
  silent.precoders.set_zero();
  for (double v : power_consumption(silent, inst)) CHECK(v == 0.0);
}

TEST_CASE("power audit: solver output respects the physical budget") {
  const ProblemInstance inst = selfcheck::random_instance(8, 4, 3, 1.0, 0.1, 52);
  SolverConfig cfg;
  cfg.max_iters = 2000;
  Rng rng(53);
  const SolveResult res = solve(inst, 4, cfg, rng);
  for (double v : power_consumption(res.factorization, inst))
    CHECK(v <= inst.p_max * (1.0 + 1e-12));
}

TEST_CASE("noiseless simulation is exact") {
  Topology topo;
  topo.n_senders = 2;
  topo.n_receivers = 2;
  topo.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  topo.neighbors = {{0, 1}, {0, 1}};
  ChannelRealization ch;
  ch.h = {cplx{0.8, 0.3}, cplx{-0.2, 1.1}, cplx{1.4, 0.0}, cplx{0.5, -0.6}};
  DataSamples ds;
  ds.s = {cplx{0.9, -0.4}, cplx{-1.2, 0.2}};
  ProblemInstance inst = build_instance(topo, ch, ds, 1.0, 1e-300);
  // noise_var must be positive for build_instance; make it exactly zero here
  // to model a noiseless channel.
  inst.noise_var = 0.0;

  SUBCASE("exact factorization decodes the target") {
    const Factorization fac = exact_factorization(inst, 2);
    Rng rng(54);
    const EmpiricalMse emp = simulate_transmission(fac, inst, 10, rng);
    for (double m : emp.mean) CHECK(m < 1e-25);
  }

  SUBCASE("any factorization reproduces its bias exactly") {
    const Factorization fac = random_factorization(inst, 3, 55);
    Rng rng(56);
    const EmpiricalMse emp = simulate_transmission(fac, inst, 7, rng);

    CMatrix r;
    kernels::residual(fac.precoders, fac.decoders, inst.weights, r);
    std::vector<cplx> bias(2);
    for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
      const auto [i, j] = inst.topology.edges[k];
      bias[static_cast<std::size_t>(j)] +=
          inst.samples.s[static_cast<std::size_t>(i)] * inst.channels.h[k] *
          r(i, j);
    }
    for (int j = 0; j < 2; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      CHECK(emp.mean[sj] ==
            doctest::Approx(std::norm(bias[sj])).epsilon(1e-12));
      // Identical per-trial values: the standard error is pure cancellation
      // residue of the one-pass variance, bounded by sqrt(eps) * mean.
      CHECK(emp.std_error[sj] <= 1e-7 * emp.mean[sj]);
    }
  }
}

TEST_CASE("empirical MSE agrees with the analytical value at 3 sigma") {
  const ProblemInstance inst = selfcheck::random_instance(8, 4, 3, 1.0, 0.1, 57);
  const Factorization fac = random_factorization(inst, 5, 58);
  const MseReport report = analytical_mse(fac, inst);

  Rng rng(59);
  const EmpiricalMse emp = simulate_transmission(fac, inst, 100000, rng);
  CHECK(emp.trials == 100000);
  CHECK(std::abs(emp.network_mean - report.total) <
        3.0 * emp.network_std_error);

  // Per-receiver agreement as well.
  CMatrix r;
  kernels::residual(fac.precoders, fac.decoders, inst.weights, r);
  std::vector<cplx> bias(4);
  for (std::size_t k = 0; k < inst.topology.edges.size(); ++k) {
    const auto [i, j] = inst.topology.edges[k];
    bias[static_cast<std::size_t>(j)] +=
        inst.samples.s[static_cast<std::size_t>(i)] * inst.channels.h[k] *
        r(i, j);
  }
  for (int j = 0; j < 4; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    double qn = 0.0;
    for (int t = 0; t < 5; ++t) qn += std::norm(fac.decoders(t, j));
    const double expect = std::norm(bias[sj]) + inst.noise_var * qn;
    CHECK(std::abs(emp.mean[sj] - expect) < 3.0 * emp.std_error[sj]);
  }
}

TEST_CASE("parallel and reference simulations agree") {
  const ProblemInstance inst = selfcheck::random_instance(6, 3, 2, 1.0, 0.3, 60);
  const Factorization fac = random_factorization(inst, 4, 61);
  Rng rng_a(62), rng_b(62);
  const EmpiricalMse par = simulate_transmission(fac, inst, 9000, rng_a);
  const EmpiricalMse ref = simulate_transmission_reference(fac, inst, 9000, rng_b);

  for (std::size_t j = 0; j < par.mean.size(); ++j) {
    CHECK(std::abs(par.mean[j] - ref.mean[j]) <= 1e-12 * ref.mean[j]);
    CHECK(std::abs(par.std_error[j] - ref.std_error[j]) <=
          1e-12 * ref.std_error[j]);
  }
  CHECK(std::abs(par.network_mean - ref.network_mean) <=
        1e-12 * ref.network_mean);
}

TEST_CASE("simulation results do not depend on the thread count") {
#ifdef _OPENMP
  const ProblemInstance inst = selfcheck::random_instance(6, 3, 2, 1.0, 0.3, 63);
  const Factorization fac = random_factorization(inst, 4, 64);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  Rng rng_a(65);
  const EmpiricalMse one = simulate_transmission(fac, inst, 10000, rng_a);
  omp_set_num_threads(std::max(2, saved));
  Rng rng_b(65);
  const EmpiricalMse many = simulate_transmission(fac, inst, 10000, rng_b);
  omp_set_num_threads(saved);

  CHECK(one.mean == many.mean);
  CHECK(one.std_error == many.std_error);
  CHECK(one.network_mean == many.network_mean);
  CHECK(one.network_std_error == many.network_std_error);
#endif
}
