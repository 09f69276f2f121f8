#include <cmath>

#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ota/kernels.hpp"
#include "ota/rng.hpp"

using namespace ota;

namespace {

CMatrix random_matrix(int rows, int cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.cnormal();
  return m;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference") {
  Rng rng(123);
  // Large enough to actually enter the parallel branches.
  const int slots = 24, ns = 384, nr = 192;
  const CMatrix p = random_matrix(slots, ns, rng);
  const CMatrix q = random_matrix(slots, nr, rng);
  const CMatrix w = random_matrix(ns, nr, rng);

  CMatrix r_par, r_ref;
  kernels::residual(p, q, w, r_par);
  reference::residual(p, q, w, r_ref);
  // The production kernel splits the dot-product accumulation, so the two
  // paths agree to rounding, not bit-for-bit.
  for (std::size_t k = 0; k < r_par.size(); ++k)
    CHECK(std::abs(r_par.data()[k] - r_ref.data()[k]) <=
          1e-13 * std::abs(r_ref.data()[k]) + 1e-15);

  // The gradient kernels accumulate in the reference order: identical
  // inputs give bit-identical outputs.
  CMatrix gp_par, gp_ref, gq_par, gq_ref;
  kernels::grad_precoders(q, r_par, gp_par);
  reference::grad_precoders(q, r_par, gp_ref);
  CHECK(gp_par == gp_ref);
  kernels::grad_decoders(p, r_par, 0.37, q, gq_par);
  reference::grad_decoders(p, r_par, 0.37, q, gq_ref);
  CHECK(gq_par == gq_ref);

  // Reductions differ only by summation order.
  const double f_par = kernels::frobenius_sq(r_par);
  const double f_ref = reference::frobenius_sq(r_ref);
  CHECK(std::abs(f_par - f_ref) <= 1e-13 * f_ref);
  const double d_par = kernels::diff_frobenius_sq(p, gp_par);
  const double d_ref = reference::diff_frobenius_sq(p, gp_ref);
  CHECK(std::abs(d_par - d_ref) <= 1e-13 * d_ref);
}

TEST_CASE("kernel results do not depend on the thread count") {
#ifdef _OPENMP
  Rng rng(321);
  // Above the parallel threshold so the parallel branch is what is tested.
  const int slots = 24, ns = 384, nr = 192;
  const CMatrix p = random_matrix(slots, ns, rng);
  const CMatrix q = random_matrix(slots, nr, rng);
  const CMatrix w = random_matrix(ns, nr, rng);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  CMatrix r1, gp1, gq1;
  kernels::residual(p, q, w, r1);
  kernels::grad_precoders(q, r1, gp1);
  kernels::grad_decoders(p, r1, 0.1, q, gq1);
  const double f1 = kernels::frobenius_sq(r1);

  omp_set_num_threads(std::max(2, saved));
  CMatrix r2, gp2, gq2;
  kernels::residual(p, q, w, r2);
  kernels::grad_precoders(q, r2, gp2);
  kernels::grad_decoders(p, r2, 0.1, q, gq2);
  const double f2 = kernels::frobenius_sq(r2);
  omp_set_num_threads(saved);

  CHECK(r1 == r2);
  CHECK(gp1 == gp2);
  CHECK(gq1 == gq2);
  CHECK(f1 == f2);
#endif
}

TEST_CASE("edge mask zeroes exactly the non-edges") {
  Rng rng(55);
  CMatrix r = random_matrix(4, 3, rng);
  std::vector<std::uint8_t> mask(12, 0);
  mask[0] = mask[5] = mask[11] = 1;
  const CMatrix before = r;
  kernels::apply_edge_mask(r, mask);
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (mask[k])
      CHECK(r.data()[k] == before.data()[k]);
    else
      CHECK(r.data()[k] == cplx{});
  }
}

TEST_CASE("step_project lands every column inside its ball") {
  Rng rng(77);
  const int slots = 6, ns = 20;
  const CMatrix p = random_matrix(slots, ns, rng);
  const CMatrix g = random_matrix(slots, ns, rng);
  std::vector<double> caps(ns);
  for (auto& c : caps) c = rng.uniform() * 2.0;

  CMatrix out;
  kernels::step_project(p, g, 0.5, caps, out);
  for (int i = 0; i < ns; ++i) {
    double norm_sq = 0.0;
    for (int t = 0; t < slots; ++t) norm_sq += std::norm(out(t, i));
    CHECK(norm_sq <= caps[static_cast<std::size_t>(i)] * (1.0 + 1e-12));
  }
}
