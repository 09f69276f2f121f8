#ifndef OTA_KERNELS_HPP
#define OTA_KERNELS_HPP

#include <cstdint>
#include <vector>

#include "ota/matrix.hpp"

// Dense kernels behind the solver and the evaluation code.
//
// ota::kernels is the production path: loops are OpenMP-parallel over
// output columns, and every output element is accumulated by exactly one
// thread in a fixed order, so results are bit-identical for any thread
// count. Frobenius reductions go through per-column partial sums that are
// combined sequentially in column order, which keeps them deterministic
// as well.
//
// ota::reference holds plain serial implementations of the same
// operations, kept for testing and benchmarked against the parallel path.
// The gradient kernels accumulate in the same per-element order as the
// reference and agree bit-for-bit on identical inputs; the residual kernel
// and the reductions use a fixed split accumulation and agree with the
// reference up to floating-point reassociation.

namespace ota::kernels {

// r = p^T q - w  (plain transpose, no conjugation).
// p: T x Ns, q: T x Nr, w and r: Ns x Nr.
void residual(const CMatrix& p, const CMatrix& q, const CMatrix& w, CMatrix& r);

// Zero the entries of r that do not correspond to an edge.
// mask is column-major Ns x Nr, nonzero on edges.
void apply_edge_mask(CMatrix& r, const std::vector<std::uint8_t>& mask);

// gp = 2 conj(q) r^T   (T x Ns)
void grad_precoders(const CMatrix& q, const CMatrix& r, CMatrix& gp);

// gq = 2 (conj(p) r + lambda q)   (T x Nr)
void grad_decoders(const CMatrix& p, const CMatrix& r, double lambda,
                   const CMatrix& q, CMatrix& gq);

double frobenius_sq(const CMatrix& m);

// Squared Frobenius norm of a - b without forming the difference.
double diff_frobenius_sq(const CMatrix& a, const CMatrix& b);

// out = x - alpha * g
void step(const CMatrix& x, const CMatrix& g, double alpha, CMatrix& out);

// out = column-wise ball projection of (p - alpha * gp); column i is scaled
// onto the ball of squared radius caps[i] when it lands outside.
void step_project(const CMatrix& p, const CMatrix& gp, double alpha,
                  const std::vector<double>& caps, CMatrix& out);

}  // namespace ota::kernels

namespace ota::reference {

void residual(const CMatrix& p, const CMatrix& q, const CMatrix& w, CMatrix& r);
void apply_edge_mask(CMatrix& r, const std::vector<std::uint8_t>& mask);
void grad_precoders(const CMatrix& q, const CMatrix& r, CMatrix& gp);
void grad_decoders(const CMatrix& p, const CMatrix& r, double lambda,
                   const CMatrix& q, CMatrix& gq);
double frobenius_sq(const CMatrix& m);
double diff_frobenius_sq(const CMatrix& a, const CMatrix& b);

}  // namespace ota::reference

#endif
