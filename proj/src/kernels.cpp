#include "ota/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ota {
namespace {

// Below this work estimate the parallel-for dispatch costs more than the
// loop body (measured: a 30x50x30 product gets slower, not faster); the
// if() clause keeps such problems on one thread without changing results.
// Sweeps parallelize over realizations instead, so small-shape kernels
// running serial is the common, intended case.
constexpr std::size_t kParallelThreshold = 128 * 1024;

}  // namespace

namespace kernels {

void residual(const CMatrix& p, const CMatrix& q, const CMatrix& w, CMatrix& r) {
  assert(p.rows() == q.rows());
  assert(w.rows() == p.cols() && w.cols() == q.cols());
  if (!r.same_shape(w)) r = CMatrix(w.rows(), w.cols());
  const int slots = p.rows();
  const int ns = p.cols();
  const int nr = q.cols();
#pragma omp parallel for schedule(static) \
    if (static_cast<std::size_t>(ns) * nr * slots > kParallelThreshold)
  for (int j = 0; j < nr; ++j) {
    const cplx* qj = q.col(j);
    for (int i = 0; i < ns; ++i) {
      const cplx* pi = p.col(i);
      // Two accumulators break the dependency chain of the dot product;
      // the even/odd split keeps the summation order fixed.
      cplx acc0{}, acc1{};
      int t = 0;
      for (; t + 1 < slots; t += 2) {
        acc0 += pi[t] * qj[t];
        acc1 += pi[t + 1] * qj[t + 1];
      }
      if (t < slots) acc0 += pi[t] * qj[t];
      r(i, j) = (acc0 + acc1) - w(i, j);
    }
  }
}

void apply_edge_mask(CMatrix& r, const std::vector<std::uint8_t>& mask) {
  assert(mask.size() == r.size());
  cplx* data = r.data();
  const std::size_t n = r.size();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) data[k] = cplx{};
  }
}

void grad_precoders(const CMatrix& q, const CMatrix& r, CMatrix& gp) {
  const int slots = q.rows();
  const int ns = r.rows();
  const int nr = q.cols();
  assert(r.cols() == nr);
  if (gp.rows() != slots || gp.cols() != ns) gp = CMatrix(slots, ns);
#pragma omp parallel for schedule(static) \
    if (static_cast<std::size_t>(ns) * nr * slots > kParallelThreshold)
  for (int i = 0; i < ns; ++i) {
    cplx* out = gp.col(i);
    std::fill(out, out + slots, cplx{});
    for (int j = 0; j < nr; ++j) {
      const cplx rij = r(i, j);
      const cplx* qj = q.col(j);
      for (int t = 0; t < slots; ++t) out[t] += std::conj(qj[t]) * rij;
    }
    for (int t = 0; t < slots; ++t) out[t] *= 2.0;
  }
}

void grad_decoders(const CMatrix& p, const CMatrix& r, double lambda,
                   const CMatrix& q, CMatrix& gq) {
  const int slots = p.rows();
  const int ns = p.cols();
  const int nr = r.cols();
  assert(r.rows() == ns && q.rows() == slots && q.cols() == nr);
  if (!gq.same_shape(q)) gq = CMatrix(slots, nr);
#pragma omp parallel for schedule(static) \
    if (static_cast<std::size_t>(ns) * nr * slots > kParallelThreshold)
  for (int j = 0; j < nr; ++j) {
    cplx* out = gq.col(j);
    const cplx* qj = q.col(j);
    const cplx* rj = r.col(j);
    for (int t = 0; t < slots; ++t) out[t] = lambda * qj[t];
    for (int i = 0; i < ns; ++i) {
      const cplx rij = rj[i];
      const cplx* pi = p.col(i);
      for (int t = 0; t < slots; ++t) out[t] += std::conj(pi[t]) * rij;
    }
    for (int t = 0; t < slots; ++t) out[t] *= 2.0;
  }
}

double frobenius_sq(const CMatrix& m) {
  const int cols = m.cols();
  const int rows = m.rows();
  std::vector<double> partial(static_cast<std::size_t>(cols), 0.0);
#pragma omp parallel for schedule(static) if (m.size() > kParallelThreshold)
  for (int c = 0; c < cols; ++c) {
    const cplx* mc = m.col(c);
    double acc = 0.0;
    for (int t = 0; t < rows; ++t) acc += std::norm(mc[t]);
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

double diff_frobenius_sq(const CMatrix& a, const CMatrix& b) {
  assert(a.same_shape(b));
  const int cols = a.cols();
  const int rows = a.rows();
  std::vector<double> partial(static_cast<std::size_t>(cols), 0.0);
#pragma omp parallel for schedule(static) if (a.size() > kParallelThreshold)
  for (int c = 0; c < cols; ++c) {
    const cplx* ac = a.col(c);
    const cplx* bc = b.col(c);
    double acc = 0.0;
    for (int t = 0; t < rows; ++t) acc += std::norm(ac[t] - bc[t]);
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

void step(const CMatrix& x, const CMatrix& g, double alpha, CMatrix& out) {
  assert(x.same_shape(g));
  if (!out.same_shape(x)) out = CMatrix(x.rows(), x.cols());
  const cplx* xd = x.data();
  const cplx* gd = g.data();
  cplx* od = out.data();
  const std::size_t n = x.size();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
    od[k] = xd[k] - alpha * gd[k];
  }
}

void step_project(const CMatrix& p, const CMatrix& gp, double alpha,
                  const std::vector<double>& caps, CMatrix& out) {
  assert(p.same_shape(gp));
  assert(caps.size() == static_cast<std::size_t>(p.cols()));
  if (!out.same_shape(p)) out = CMatrix(p.rows(), p.cols());
  const int rows = p.rows();
  const int cols = p.cols();
#pragma omp parallel for schedule(static) if (p.size() > kParallelThreshold)
  for (int i = 0; i < cols; ++i) {
    const cplx* pi = p.col(i);
    const cplx* gi = gp.col(i);
    cplx* oi = out.col(i);
    double norm_sq = 0.0;
    for (int t = 0; t < rows; ++t) {
      oi[t] = pi[t] - alpha * gi[t];
      norm_sq += std::norm(oi[t]);
    }
    const double cap = caps[static_cast<std::size_t>(i)];
    if (norm_sq > cap) {
      const double scale = std::sqrt(cap) / std::sqrt(norm_sq);
      for (int t = 0; t < rows; ++t) oi[t] *= scale;
    }
  }
}

}  // namespace kernels

namespace reference {

void residual(const CMatrix& p, const CMatrix& q, const CMatrix& w, CMatrix& r) {
  if (!r.same_shape(w)) r = CMatrix(w.rows(), w.cols());
  for (int j = 0; j < q.cols(); ++j) {
    for (int i = 0; i < p.cols(); ++i) {
      cplx acc{};
      for (int t = 0; t < p.rows(); ++t) acc += p(t, i) * q(t, j);
      r(i, j) = acc - w(i, j);
    }
  }
}

void apply_edge_mask(CMatrix& r, const std::vector<std::uint8_t>& mask) {
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!mask[k]) r.data()[k] = cplx{};
  }
}

void grad_precoders(const CMatrix& q, const CMatrix& r, CMatrix& gp) {
  const int slots = q.rows();
  if (gp.rows() != slots || gp.cols() != r.rows()) gp = CMatrix(slots, r.rows());
  for (int i = 0; i < r.rows(); ++i) {
    for (int t = 0; t < slots; ++t) {
      cplx acc{};
      for (int j = 0; j < q.cols(); ++j) acc += std::conj(q(t, j)) * r(i, j);
      gp(t, i) = 2.0 * acc;
    }
  }
}

void grad_decoders(const CMatrix& p, const CMatrix& r, double lambda,
                   const CMatrix& q, CMatrix& gq) {
  const int slots = p.rows();
  if (!gq.same_shape(q)) gq = CMatrix(slots, r.cols());
  for (int j = 0; j < r.cols(); ++j) {
    for (int t = 0; t < slots; ++t) {
      cplx acc = lambda * q(t, j);
      for (int i = 0; i < p.cols(); ++i) acc += std::conj(p(t, i)) * r(i, j);
      gq(t, j) = 2.0 * acc;
    }
  }
}

double frobenius_sq(const CMatrix& m) {
  double total = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) total += std::norm(m.data()[k]);
  return total;
}

double diff_frobenius_sq(const CMatrix& a, const CMatrix& b) {
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    total += std::norm(a.data()[k] - b.data()[k]);
  return total;
}

}  // namespace reference
}  // namespace ota
