#include <cmath>
#include <sstream>

#include <doctest.h>

#include "ota/evaluation.hpp"
#include "ota/kernels.hpp"
#include "ota/selfcheck.hpp"
#include "ota/solver.hpp"

using namespace ota;

namespace {

CMatrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = scale * rng.cnormal();
  return m;
}

CMatrix single(cplx v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

double rel_frobenius_error(const CMatrix& a, const CMatrix& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += std::norm(a.data()[k] - b.data()[k]);
    den += std::norm(b.data()[k]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("objective: zero point gives the weight norm") {
  Rng rng(1);
  const CMatrix w = random_matrix(5, 4, rng);
  const CMatrix p(3, 5), q(3, 4);
  CHECK(objective_raw(p, q, w, 0.0) ==
        doctest::Approx(kernels::frobenius_sq(w)).epsilon(1e-15));
}

TEST_CASE("objective: exact factorization with zero penalty is zero") {
  const CMatrix p = single({2.0, 1.0});
  const CMatrix q = single({0.5, -0.25});
  const CMatrix w = single(cplx{2.0, 1.0} * cplx{0.5, -0.25});
  CHECK(objective_raw(p, q, w, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("objective: scalar case by direct substitution") {
  // |2*1 - 1|^2 + 0.5 * |2|^2 = 1 + 2 = 3
  CHECK(objective_raw(single({1, 0}), single({2, 0}), single({1, 0}), 0.5) ==
        doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("objective rejects mismatched shapes") {
  Rng rng(2);
  const CMatrix p = random_matrix(3, 5, rng);
  const CMatrix q = random_matrix(3, 4, rng);
  const CMatrix w = random_matrix(5, 3, rng);
  CHECK_THROWS_AS(objective_raw(p, q, w, 0.1), std::invalid_argument);
}

TEST_CASE("gradient: scalar substitution") {
  const auto [gp, gq] =
      gradient_raw(single({1, 0}), single({1, 0}), single({0, 0}), 0.0);
  CHECK(gp(0, 0) == cplx{2.0, 0.0});
  CHECK(gq(0, 0) == cplx{2.0, 0.0});
}

TEST_CASE("gradient vanishes at an exact factorization") {
  Rng rng(3);
  const CMatrix p = random_matrix(4, 3, rng);
  const CMatrix q = random_matrix(4, 2, rng);
  CMatrix w(3, 2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) {
      cplx acc{};
      for (int t = 0; t < 4; ++t) acc += p(t, i) * q(t, j);
      w(i, j) = acc;
    }
  const auto [gp, gq] = gradient_raw(p, q, w, 0.0);
  for (std::size_t k = 0; k < gp.size(); ++k)
    CHECK(std::abs(gp.data()[k]) < 1e-13);
  for (std::size_t k = 0; k < gq.size(); ++k)
    CHECK(std::abs(gq.data()[k]) < 1e-13);
}

TEST_CASE("gradient matches central finite differences") {
  // The finite-difference path is an independent oracle over the
  // real-coordinate embedding.
  for (std::uint64_t seed : {10ULL, 11ULL, 12ULL})
    CHECK(selfcheck::gradient_deviation(3, 4, 2, seed) < 1e-6);
}

TEST_CASE("masked gradient matches masked finite differences") {
  Rng rng(4);
  const CMatrix p = random_matrix(3, 5, rng);
  const CMatrix q = random_matrix(3, 4, rng);
  const CMatrix w = random_matrix(5, 4, rng);
  std::vector<std::uint8_t> mask(20, 0);
  for (std::size_t k = 0; k < mask.size(); k += 3) mask[k] = 1;

  const auto [gp, gq] = gradient_raw(p, q, w, 0.2, &mask);
  const auto [fp, fq] = selfcheck::fd_gradient(p, q, w, 0.2, 1e-6, &mask);
  CHECK(rel_frobenius_error(gp, fp) < 1e-6);
  CHECK(rel_frobenius_error(gq, fq) < 1e-6);
}

TEST_CASE("projection: boundary, shrinking, zero column") {
  CMatrix p(2, 3);
  p(0, 0) = {3.0, 0.0};
  p(1, 0) = {4.0, 0.0};
  p(0, 1) = {3.0, 0.0};
  p(1, 1) = {4.0, 0.0};
  p(0, 2) = {0.0, 0.0};
  p(1, 2) = {0.0, 0.0};
  const CMatrix out = project(p, {25.0, 1.0, 0.5});
  CHECK(out(0, 0) == cplx{3.0, 0.0});  // already on the boundary
  CHECK(out(1, 0) == cplx{4.0, 0.0});
  CHECK(out(0, 1).real() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(out(1, 1).real() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(out(0, 2) == cplx{});  // zero column is a fixed point
  CHECK(out(1, 2) == cplx{});
}

TEST_CASE("projection properties on random columns") {
  Rng rng(5);
  for (int rep = 0; rep < 1000; ++rep) {
    const int rows = 1 + static_cast<int>(rng.below(6));
    const CMatrix a = random_matrix(rows, 1, rng, 1.5);
    const CMatrix b = random_matrix(rows, 1, rng, 1.5);
    const std::vector<double> cap = {rng.uniform() * 3.0};
    const CMatrix pa = project(a, cap);
    const CMatrix pb = project(b, cap);
    const CMatrix paa = project(pa, cap);

    double norm_pa = 0.0, dist_before = 0.0, dist_after = 0.0;
    for (int t = 0; t < rows; ++t) {
      norm_pa += std::norm(pa(t, 0));
      dist_before += std::norm(a(t, 0) - b(t, 0));
      dist_after += std::norm(pa(t, 0) - pb(t, 0));
    }
    CHECK(norm_pa <= cap[0] * (1.0 + 1e-12));
    CHECK(dist_after <= dist_before * (1.0 + 1e-12));
    for (int t = 0; t < rows; ++t)
      CHECK(std::abs(paa(t, 0) - pa(t, 0)) <= 1e-15 * std::abs(pa(t, 0)));
  }
}

TEST_CASE("step size: direct substitutions") {
  CHECK(step_size(1.0, 1.0, 1.0, 2.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(step_size(0.5, 0.5, 1.0, 0.0) ==
        doctest::Approx(std::sqrt(2.0) * 0.5).epsilon(1e-15));
  CHECK(step_size(2.0, 1.0, 10.0, 1.0) ==
        doctest::Approx(std::sqrt(12.0)).epsilon(1e-15));
}

TEST_CASE("tiny network converges to the analytic optimum") {
  // One sender, one receiver, h = s = 1, P_max = 1: the constrained optimum
  // is p on the unit circle with q = 1/p, so the MSE equals noise_var.
  Topology topo;
  topo.n_senders = 1;
  topo.n_receivers = 1;
  topo.edges = {{0, 0}};
  topo.neighbors = {{0}};
  ChannelRealization ch;
  ch.h = {cplx{1.0, 0.0}};
  DataSamples ds;
  ds.s = {cplx{1.0, 0.0}};
  const double noise_var = 0.1;
  const ProblemInstance inst = build_instance(topo, ch, ds, 1.0, noise_var);

  SolverConfig cfg;
  cfg.lambda = 1e-6;
  // The pull toward the power boundary scales with lambda, so this
  // almost-unpenalized 1-D case needs a longer (still sub-second) budget.
  cfg.max_iters = 500000;
  Rng rng(6);
  const SolveResult res = solve(inst, 1, cfg, rng);
  const MseReport report = analytical_mse(res.factorization, inst);
  CHECK(std::abs(report.total / noise_var - 1.0) < 0.02);
  CHECK(std::abs(std::abs(res.factorization.precoders(0, 0)) - 1.0) < 0.01);
}

TEST_CASE("frozen precoders: iterates reach the ridge solution") {
  const ProblemInstance inst = selfcheck::random_instance(10, 6, 3, 1.0, 0.1, 7);
  SolverConfig cfg;
  cfg.optimize_precoders = false;
  Rng rng(8);
  const SolveResult res = solve(inst, 5, cfg, rng);
  const CMatrix oracle =
      ridge_decoders(res.factorization.precoders, inst, cfg.lambda);
  CHECK(rel_frobenius_error(res.factorization.decoders, oracle) < 1e-4);
}

TEST_CASE("zero weights drive the decoders to zero") {
  Topology topo;
  topo.n_senders = 2;
  topo.n_receivers = 2;
  topo.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  topo.neighbors = {{0, 1}, {0, 1}};
  ChannelRealization ch;
  ch.h = {cplx{1, 0}, cplx{1, 0}, cplx{1, 0}, cplx{1, 0}};
  DataSamples ds;
  ds.s = {cplx{1, 0}, cplx{1, 0}};
  ProblemInstance inst = build_instance(topo, ch, ds, 1.0, 0.1);
  inst.weights.set_zero();  // synthetic: objective optimum is Q = 0

  SolverConfig cfg;
  cfg.lambda = 0.5;
  Rng rng(9);
  const SolveResult res = solve(inst, 2, cfg, rng);
  CHECK(res.trace.objective_history.back() < 1e-12);
  CHECK(kernels::frobenius_sq(res.factorization.decoders) < 1e-12);
}

TEST_CASE("solve trace bookkeeping and feasibility") {
  const ProblemInstance inst = selfcheck::random_instance(8, 5, 2, 1.0, 0.1, 10);
  SolverConfig cfg;
  cfg.max_iters = 300;
  cfg.rel_tol = 0.0;  // force the full budget
  Rng rng(11);
  const SolveResult res = solve(inst, 4, cfg, rng);

  CHECK(res.trace.iterations_run == 300);
  CHECK(res.trace.terminated_by == StopReason::max_iters);
  CHECK(res.trace.objective_history.size() == 300);
  CHECK(res.trace.step_history.size() == 300);
  for (double a : res.trace.step_history) CHECK(a > 0.0);

  for (int i = 0; i < inst.topology.n_senders; ++i) {
    double norm_sq = 0.0;
    for (int t = 0; t < 4; ++t)
      norm_sq += std::norm(res.factorization.precoders(t, i));
    CHECK(norm_sq <= inst.caps[static_cast<std::size_t>(i)] * (1.0 + 1e-12));
  }
}

TEST_CASE("an exactly repeated iterate stops as stagnation") {
  // With zero weights the decoders decay geometrically; once the iterate
  // underflows to exact zero it stops moving and the run must not spin.
  Topology topo;
  topo.n_senders = 1;
  topo.n_receivers = 1;
  topo.edges = {{0, 0}};
  topo.neighbors = {{0}};
  ChannelRealization ch;
  ch.h = {cplx{1, 0}};
  DataSamples ds;
  ds.s = {cplx{1, 0}};
  ProblemInstance inst = build_instance(topo, ch, ds, 1.0, 0.1);
  inst.weights.set_zero();

  SolverConfig cfg;
  cfg.lambda = 0.5;
  cfg.rel_tol = 0.0;  // never stop on iterate change
  cfg.max_iters = 100000;
  Rng rng(21);
  const SolveResult res = solve(inst, 2, cfg, rng);
  CHECK(res.trace.terminated_by == StopReason::stagnation);
  CHECK(res.trace.iterations_run < cfg.max_iters);
  CHECK(kernels::frobenius_sq(res.factorization.decoders) == 0.0);
}

TEST_CASE("solve stops on the relative-change tolerance") {
  const ProblemInstance inst = selfcheck::random_instance(6, 4, 2, 1.0, 0.1, 12);
  SolverConfig cfg;
  cfg.rel_tol = 1e-6;
  Rng rng(13);
  const SolveResult res = solve(inst, 3, cfg, rng);
  CHECK(res.trace.terminated_by == StopReason::tolerance);
  CHECK(res.trace.iterations_run < cfg.max_iters);
}

TEST_CASE("divergent data aborts with a diagnostic") {
  const ProblemInstance inst = selfcheck::random_instance(6, 4, 2, 1.0, 0.1, 14);
  SolverConfig cfg;
  cfg.init_scale = 1e200;  // objective overflows immediately
  Rng rng(15);
  CHECK_THROWS_AS(solve(inst, 3, cfg, rng), std::runtime_error);
}

TEST_CASE("verbose mode streams one record per iteration") {
  const ProblemInstance inst = selfcheck::random_instance(5, 3, 2, 1.0, 0.1, 16);
  SolverConfig cfg;
  cfg.max_iters = 25;
  cfg.rel_tol = 0.0;
  std::ostringstream log;
  cfg.trace_out = &log;
  Rng rng(17);
  solve(inst, 2, cfg, rng);
  int lines = 0;
  std::string line;
  std::istringstream in(log.str());
  while (std::getline(in, line)) {
    CHECK(line.rfind("iter=", 0) == 0);
    CHECK(line.find(" obj=") != std::string::npos);
    CHECK(line.find(" alpha=") != std::string::npos);
    ++lines;
  }
  CHECK(lines == 25);
}

TEST_CASE("final MSE does not get worse with one more slot") {
  // Padding with a zero slot is always feasible, so the optimum at T+1 is
  // at least as good; the solver should track that within a small slack.
  const ProblemInstance inst = selfcheck::random_instance(8, 4, 3, 1.0, 0.1, 18);
  SolverConfig cfg;
  double prev_total = 0.0;
  for (int t = 2; t <= 4; ++t) {
    Rng rng(derive_seed({19, static_cast<std::uint64_t>(t)}));
    const SolveResult res = solve(inst, t, cfg, rng);
    const double total = analytical_mse(res.factorization, inst).total;
    if (t > 2) CHECK(total <= prev_total * 1.05);
    prev_total = total;
  }
}

TEST_CASE("ridge decoders: scalar case and stationarity") {
  const cplx scalar = ridge_decoders(single({1, 0}), single({1, 0}), 1.0)(0, 0);
  CHECK(scalar.real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(scalar.imag() == 0.0);

  // P = 0 gives Q = 0.
  const CMatrix zero_q = ridge_decoders(CMatrix(3, 4), CMatrix(4, 2), 0.3);
  for (std::size_t k = 0; k < zero_q.size(); ++k)
    CHECK(zero_q.data()[k] == cplx{});

  // The decoder gradient vanishes at the ridge solution.
  Rng rng(20);
  const CMatrix p = random_matrix(4, 6, rng);
  const CMatrix w = random_matrix(6, 3, rng);
  const CMatrix q = ridge_decoders(p, w, 0.25);
  const auto [gp, gq] = gradient_raw(p, q, w, 0.25);
  (void)gp;
  for (std::size_t k = 0; k < gq.size(); ++k)
    CHECK(std::abs(gq.data()[k]) < 1e-10);

  CHECK_THROWS_AS(ridge_decoders(p, w, 0.0), std::invalid_argument);
}
