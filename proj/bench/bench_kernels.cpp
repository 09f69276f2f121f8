// Serial reference vs OpenMP kernels. The sweep shapes bracket the scale
// the experiments run at (T x 50 x 30) and a larger shape where the
// parallel path pays off.

#include <benchmark/benchmark.h>

#include "ota/evaluation.hpp"
#include "ota/kernels.hpp"
#include "ota/rng.hpp"
#include "ota/selfcheck.hpp"
#include "ota/solver.hpp"

using namespace ota;

namespace {

CMatrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix m(rows, cols);
  for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = rng.cnormal();
  return m;
}

struct Shapes {
  int slots, ns, nr;
};

constexpr Shapes kShapes[] = {{30, 50, 30}, {64, 512, 256}};

void bm_gradient_reference(benchmark::State& state) {
  const Shapes s = kShapes[state.range(0)];
  const CMatrix p = random_matrix(s.slots, s.ns, 1);
  const CMatrix q = random_matrix(s.slots, s.nr, 2);
  const CMatrix w = random_matrix(s.ns, s.nr, 3);
  CMatrix r, gp, gq;
  for (auto _ : state) {
    reference::residual(p, q, w, r);
    reference::grad_precoders(q, r, gp);
    reference::grad_decoders(p, r, 0.1, q, gq);
    benchmark::DoNotOptimize(gq.data());
  }
}

void bm_gradient_kernels(benchmark::State& state) {
  const Shapes s = kShapes[state.range(0)];
  const CMatrix p = random_matrix(s.slots, s.ns, 1);
  const CMatrix q = random_matrix(s.slots, s.nr, 2);
  const CMatrix w = random_matrix(s.ns, s.nr, 3);
  CMatrix r, gp, gq;
  for (auto _ : state) {
    kernels::residual(p, q, w, r);
    kernels::grad_precoders(q, r, gp);
    kernels::grad_decoders(p, r, 0.1, q, gq);
    benchmark::DoNotOptimize(gq.data());
  }
}

void bm_simulate_reference(benchmark::State& state) {
  const ProblemInstance inst = selfcheck::random_instance(20, 10, 5, 1.0, 0.1, 7);
  Factorization fac;
  fac.precoders = project(random_matrix(5, 20, 8), inst.caps);
  fac.decoders = random_matrix(5, 10, 9);
  for (auto _ : state) {
    Rng rng(10);
    const auto emp = simulate_transmission_reference(fac, inst, 20000, rng);
    benchmark::DoNotOptimize(emp.network_mean);
  }
}

void bm_simulate_kernels(benchmark::State& state) {
  const ProblemInstance inst = selfcheck::random_instance(20, 10, 5, 1.0, 0.1, 7);
  Factorization fac;
  fac.precoders = project(random_matrix(5, 20, 8), inst.caps);
  fac.decoders = random_matrix(5, 10, 9);
  for (auto _ : state) {
    Rng rng(10);
    const auto emp = simulate_transmission(fac, inst, 20000, rng);
    benchmark::DoNotOptimize(emp.network_mean);
  }
}

void bm_solve_reference_shape(benchmark::State& state) {
  const ProblemInstance inst =
      selfcheck::random_instance(50, 30, 20, 1.0, 0.1, 11);
  SolverConfig cfg;
  cfg.max_iters = 200;
  cfg.rel_tol = 0.0;
  for (auto _ : state) {
    Rng rng(12);
    const SolveResult res = solve(inst, 30, cfg, rng);
    benchmark::DoNotOptimize(res.trace.objective_history.back());
  }
}

BENCHMARK(bm_gradient_reference)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_gradient_kernels)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_simulate_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_simulate_kernels)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_solve_reference_shape)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
