#include "ota/solver.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ota/kernels.hpp"

namespace ota {
namespace {

void check_dims(const Factorization& fac, const ProblemInstance& inst) {
  if (fac.precoders.cols() != inst.topology.n_senders ||
      fac.decoders.cols() != inst.topology.n_receivers ||
      fac.precoders.rows() != fac.decoders.rows())
    throw std::invalid_argument("factorization/instance dimension mismatch");
}

void check_raw_dims(const CMatrix& p, const CMatrix& q, const CMatrix& w) {
  if (p.rows() != q.rows() || w.rows() != p.cols() || w.cols() != q.cols())
    throw std::invalid_argument("matrix dimension mismatch");
}

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iters: return "max_iters";
    case StopReason::tolerance: return "tolerance";
    case StopReason::stagnation: return "stagnation";
  }
  return "unknown";
}

double objective_raw(const CMatrix& p, const CMatrix& q, const CMatrix& w,
                     double lambda, const std::vector<std::uint8_t>* mask) {
  check_raw_dims(p, q, w);
  CMatrix r;
  kernels::residual(p, q, w, r);
  if (mask) kernels::apply_edge_mask(r, *mask);
  return kernels::frobenius_sq(r) + lambda * kernels::frobenius_sq(q);
}

double objective(const Factorization& fac, const ProblemInstance& inst,
                 double lambda) {
  check_dims(fac, inst);
  return objective_raw(fac.precoders, fac.decoders, inst.weights, lambda);
}

std::pair<CMatrix, CMatrix> gradient_raw(const CMatrix& p, const CMatrix& q,
                                         const CMatrix& w, double lambda,
                                         const std::vector<std::uint8_t>* mask) {
  check_raw_dims(p, q, w);
  CMatrix r;
  kernels::residual(p, q, w, r);
  if (mask) kernels::apply_edge_mask(r, *mask);
  CMatrix gp, gq;
  kernels::grad_precoders(q, r, gp);
  kernels::grad_decoders(p, r, lambda, q, gq);
  return {std::move(gp), std::move(gq)};
}

std::pair<CMatrix, CMatrix> gradient(const Factorization& fac,
                                     const ProblemInstance& inst,
                                     double lambda) {
  check_dims(fac, inst);
  return gradient_raw(fac.precoders, fac.decoders, inst.weights, lambda);
}

CMatrix project(CMatrix p, const std::vector<double>& caps) {
  if (caps.size() != static_cast<std::size_t>(p.cols()))
    throw std::invalid_argument("project: one cap per column required");
  for (int i = 0; i < p.cols(); ++i) {
    cplx* col = p.col(i);
    double norm_sq = 0.0;
    for (int t = 0; t < p.rows(); ++t) norm_sq += std::norm(col[t]);
    const double cap = caps[static_cast<std::size_t>(i)];
    if (norm_sq > cap) {
      const double scale = std::sqrt(cap) / std::sqrt(norm_sq);
      for (int t = 0; t < p.rows(); ++t) col[t] *= scale;
    }
  }
  return p;
}

double step_size(double alpha_prev, double alpha_prev2, double dx_norm,
                 double dg_norm) {
  const double growth = std::sqrt(1.0 + alpha_prev / alpha_prev2) * alpha_prev;
  if (dg_norm == 0.0) return growth;
  return std::min(growth, dx_norm / (2.0 * dg_norm));
}

namespace {

struct Iterate {
  CMatrix p, q;      // current point
  CMatrix gp, gq;    // gradient there
  CMatrix r;         // residual there (masked if configured)
  double obj = 0.0;
};

// Residual, objective and gradient at (p, q), reusing the matrices held by
// the iterate. gp is skipped when the precoders are frozen.
void evaluate(Iterate& it, const ProblemInstance& inst,
              const SolverConfig& cfg) {
  kernels::residual(it.p, it.q, inst.weights, it.r);
  if (cfg.edge_mask_only) kernels::apply_edge_mask(it.r, inst.edge_mask);
  it.obj = kernels::frobenius_sq(it.r) +
           cfg.lambda * kernels::frobenius_sq(it.q);
  if (cfg.optimize_precoders) kernels::grad_precoders(it.q, it.r, it.gp);
  kernels::grad_decoders(it.p, it.r, cfg.lambda, it.q, it.gq);
}

}  // namespace

SolveResult solve(const ProblemInstance& inst, int slots,
                  const SolverConfig& cfg, Rng& rng) {
  if (slots < 1) throw std::invalid_argument("solve: slots must be >= 1");
  if (cfg.lambda < 0.0 || !(cfg.alpha0 > 0.0) || cfg.max_iters < 1 ||
      cfg.rel_tol < 0.0 || !(cfg.init_scale > 0.0))
    throw std::invalid_argument("solve: bad solver configuration");

  const int ns = inst.topology.n_senders;
  const int nr = inst.topology.n_receivers;

  // Random start, precoders projected to feasibility. Zero would sit on a
  // stationary point of the bilinear term.
  Iterate prev;
  prev.p = CMatrix(slots, ns);
  prev.q = CMatrix(slots, nr);
  for (int i = 0; i < ns; ++i) {
    cplx* col = prev.p.col(i);
    for (int t = 0; t < slots; ++t) col[t] = cfg.init_scale * rng.cnormal();
  }
  for (int j = 0; j < nr; ++j) {
    cplx* col = prev.q.col(j);
    for (int t = 0; t < slots; ++t) col[t] = cfg.init_scale * rng.cnormal();
  }
  prev.p = project(std::move(prev.p), inst.caps);
  evaluate(prev, inst, cfg);
  if (!std::isfinite(prev.obj))
    throw std::runtime_error("solve: non-finite objective at the initial point");

  // One plain gradient-projection step with the seed step size provides the
  // second point the adaptive recursion needs.
  Iterate curr;
  if (cfg.optimize_precoders) {
    kernels::step_project(prev.p, prev.gp, cfg.alpha0, inst.caps, curr.p);
  } else {
    curr.p = prev.p;
  }
  kernels::step(prev.q, prev.gq, cfg.alpha0, curr.q);
  evaluate(curr, inst, cfg);

  double dx = std::sqrt((cfg.optimize_precoders
                             ? kernels::diff_frobenius_sq(curr.p, prev.p)
                             : 0.0) +
                        kernels::diff_frobenius_sq(curr.q, prev.q));
  double alpha_prev = cfg.alpha0;
  double alpha_prev2 = cfg.alpha0;

  SolverTrace trace;
  trace.objective_history.reserve(static_cast<std::size_t>(cfg.max_iters));
  trace.step_history.reserve(static_cast<std::size_t>(cfg.max_iters));
  trace.terminated_by = StopReason::max_iters;

  Iterate next;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const double dg =
        std::sqrt((cfg.optimize_precoders
                       ? kernels::diff_frobenius_sq(curr.gp, prev.gp)
                       : 0.0) +
                  kernels::diff_frobenius_sq(curr.gq, prev.gq));
    if (dx == 0.0) {
      // Exact fixed point: the step-size rule would collapse to zero and
      // every further iterate would repeat this one.
      trace.terminated_by = StopReason::stagnation;
      break;
    }
    const double alpha = step_size(alpha_prev, alpha_prev2, dx, dg);
    if (!std::isfinite(alpha) || !std::isfinite(dg))
      throw std::runtime_error("solve: non-finite step data at iteration " +
                               std::to_string(k));

    if (cfg.optimize_precoders) {
      kernels::step_project(curr.p, curr.gp, alpha, inst.caps, next.p);
    } else {
      next.p = curr.p;
    }
    kernels::step(curr.q, curr.gq, alpha, next.q);
    evaluate(next, inst, cfg);
    if (!std::isfinite(next.obj))
      throw std::runtime_error("solve: non-finite objective at iteration " +
                               std::to_string(k));

    trace.objective_history.push_back(next.obj);
    trace.step_history.push_back(alpha);
    trace.iterations_run = k;
    if (cfg.trace_out)
      *cfg.trace_out << "iter=" << k << " obj=" << next.obj
                     << " alpha=" << alpha << '\n';

    const double dx_next =
        std::sqrt((cfg.optimize_precoders
                       ? kernels::diff_frobenius_sq(next.p, curr.p)
                       : 0.0) +
                  kernels::diff_frobenius_sq(next.q, curr.q));
    const double x_norm = std::sqrt(
        (cfg.optimize_precoders ? kernels::frobenius_sq(curr.p) : 0.0) +
        kernels::frobenius_sq(curr.q));
    const double rel_change = dx_next / std::max(1.0, x_norm);

    std::swap(prev, curr);
    std::swap(curr, next);
    dx = dx_next;
    alpha_prev2 = alpha_prev;
    alpha_prev = alpha;

    if (rel_change < cfg.rel_tol) {
      trace.terminated_by = StopReason::tolerance;
      break;
    }
  }

  SolveResult result;
  result.factorization.precoders = std::move(curr.p);
  result.factorization.decoders = std::move(curr.q);
  result.trace = std::move(trace);
  return result;
}

CMatrix ridge_decoders(const CMatrix& p, const CMatrix& w, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ridge_decoders: lambda must be positive");
  if (w.rows() != p.cols())
    throw std::invalid_argument("ridge_decoders: dimension mismatch");
  const int slots = p.rows();
  const int ns = p.cols();
  const int nr = w.cols();

  // m = conj(P) P^T + lambda I, Hermitian positive definite.
  CMatrix m(slots, slots);
  for (int b = 0; b < slots; ++b) {
    for (int a = 0; a < slots; ++a) {
      cplx acc{};
      for (int i = 0; i < ns; ++i) acc += std::conj(p(a, i)) * p(b, i);
      m(a, b) = acc;
    }
    m(b, b) += lambda;
  }

  // rhs = conj(P) W.
  CMatrix rhs(slots, nr);
  for (int j = 0; j < nr; ++j) {
    for (int a = 0; a < slots; ++a) {
      cplx acc{};
      for (int i = 0; i < ns; ++i) acc += std::conj(p(a, i)) * w(i, j);
      rhs(a, j) = acc;
    }
  }

  // In-place Cholesky m = L L^H (lower triangle).
  for (int k = 0; k < slots; ++k) {
    double diag = m(k, k).real();
    for (int c = 0; c < k; ++c) diag -= std::norm(m(k, c));
    if (!(diag > 0.0))
      throw std::runtime_error("ridge_decoders: matrix not positive definite");
    const double lkk = std::sqrt(diag);
    m(k, k) = lkk;
    for (int a = k + 1; a < slots; ++a) {
      cplx acc = m(a, k);
      for (int c = 0; c < k; ++c) acc -= m(a, c) * std::conj(m(k, c));
      m(a, k) = acc / lkk;
    }
  }

  // Solve L y = rhs, then L^H q = y, per column.
  CMatrix q(slots, nr);
  for (int j = 0; j < nr; ++j) {
    cplx* col = q.col(j);
    for (int a = 0; a < slots; ++a) {
      cplx acc = rhs(a, j);
      for (int c = 0; c < a; ++c) acc -= m(a, c) * col[c];
      col[a] = acc / m(a, a).real();
    }
    for (int a = slots - 1; a >= 0; --a) {
      cplx acc = col[a];
      for (int c = a + 1; c < slots; ++c) acc -= std::conj(m(c, a)) * col[c];
      col[a] = acc / m(a, a).real();
    }
  }
  return q;
}

CMatrix ridge_decoders(const CMatrix& p, const ProblemInstance& inst,
                       double lambda) {
  return ridge_decoders(p, inst.weights, lambda);
}

}  // namespace ota
