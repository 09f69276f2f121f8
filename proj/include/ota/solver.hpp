#ifndef OTA_SOLVER_HPP
#define OTA_SOLVER_HPP

#include <iosfwd>
#include <utility>
#include <vector>

#include "ota/matrix.hpp"
#include "ota/network.hpp"
#include "ota/rng.hpp"

namespace ota {

// The optimization variables: precoders(t, i) is sender i's coefficient in
// slot t, decoders(t, j) is receiver j's.
struct Factorization {
  CMatrix precoders;  // T x n_senders
  CMatrix decoders;   // T x n_receivers
  int slots() const { return precoders.rows(); }
};

struct SolverConfig {
  double lambda = 0.1;
  // Seed value for the adaptive step-size recursion. Kept tiny: the growth
  // rule raises it geometrically, while a large seed can overshoot before
  // the curvature estimate kicks in.
  double alpha0 = 1e-7;
  int max_iters = 20000;
  // Stop when ||X_next - X|| / max(1, ||X||) drops below this.
  double rel_tol = 1e-9;
  // Standard deviation of the random complex initialization.
  double init_scale = 0.1;
  // When false, the precoders stay at their initial (projected) value and
  // only the decoders are optimized; the problem is then convex.
  bool optimize_precoders = true;
  // When true, only residual entries on edges are penalized. Off by
  // default: the full matrix including structural zeros is what the
  // objective penalizes.
  bool edge_mask_only = false;
  // When set, one "iter= obj= alpha=" line is streamed per iteration.
  std::ostream* trace_out = nullptr;
};

enum class StopReason { max_iters, tolerance, stagnation };

const char* to_string(StopReason reason);

struct SolverTrace {
  // Objective and step size per iteration, evaluated at the iterate each
  // iteration produces. Both have length iterations_run.
  std::vector<double> objective_history;
  std::vector<double> step_history;
  int iterations_run = 0;
  StopReason terminated_by = StopReason::max_iters;
};

struct SolveResult {
  Factorization factorization;
  SolverTrace trace;
};

// ||P^T Q - W||_F^2 + lambda ||Q||_F^2 against the instance's weights.
double objective(const Factorization& fac, const ProblemInstance& inst,
                 double lambda);

// Same objective on raw matrices; mask (optional, column-major rows(w) x
// cols(w)) restricts the residual to edges.
double objective_raw(const CMatrix& p, const CMatrix& q, const CMatrix& w,
                     double lambda,
                     const std::vector<std::uint8_t>* mask = nullptr);

// Gradient with respect to the real/imaginary coordinates, packed as
// complex matrices: gp = 2 conj(Q)(P^T Q - W)^T, gq = 2(conj(P)(P^T Q - W)
// + lambda Q).
std::pair<CMatrix, CMatrix> gradient(const Factorization& fac,
                                     const ProblemInstance& inst,
                                     double lambda);
std::pair<CMatrix, CMatrix> gradient_raw(
    const CMatrix& p, const CMatrix& q, const CMatrix& w, double lambda,
    const std::vector<std::uint8_t>* mask = nullptr);

// Column-wise projection onto the power balls: column i is scaled onto the
// ball of squared radius caps[i] when it lies outside, left alone otherwise.
CMatrix project(CMatrix p, const std::vector<double>& caps);

// Adaptive step size: min of the geometric growth term
// sqrt(1 + alpha_prev/alpha_prev2) * alpha_prev and the local curvature
// estimate dx / (2 dg). dg == 0 makes the second term vacuous.
double step_size(double alpha_prev, double alpha_prev2, double dx_norm,
                 double dg_norm);

// Minimizes the penalized objective over the feasible set with adaptive
// projected gradient descent. Deterministic given (instance, slots, config,
// rng state). Throws std::runtime_error if the objective or step data turn
// non-finite (divergence or a bad instance).
SolveResult solve(const ProblemInstance& inst, int slots,
                  const SolverConfig& config, Rng& rng);

// Exact minimizer of the objective in Q for fixed P: solves
// (conj(P) P^T + lambda I) Q = conj(P) W via Cholesky. Requires lambda > 0.
CMatrix ridge_decoders(const CMatrix& p, const CMatrix& w, double lambda);
CMatrix ridge_decoders(const CMatrix& p, const ProblemInstance& inst,
                       double lambda);

}  // namespace ota

#endif
