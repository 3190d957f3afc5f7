#pragma once

#include <cstdint>
#include <vector>

#include "fdcr/linalg.hpp"
#include "fdcr/problem.hpp"

namespace fdcr {

// Maximum of (x_hat + d)^H A (x_hat + d) over the ball ||d|| <= eps, computed
// independently of any conic modeling so it can certify reformulations.
struct WorstCase {
  double value = 0.0;      // attained maximum
  CVec d;                  // maximizing perturbation
  double multiplier = 0.0; // ball multiplier mu; (mu I - A) is PSD at the optimum
  bool boundary = true;    // false when the maximizer lies strictly inside
};

// Exact maximizer via eigendecomposition and a secular-equation bisection.
// Handles the degenerate case where A x_hat has no component on the top
// eigenspace (norm deficit filled along a top eigenvector) and the interior
// optimum of a concave objective. Throws std::invalid_argument on size
// mismatch or negative eps.
WorstCase worst_case_quadratic(const HermitianMatrix& a, const CVec& x_hat, double eps);

// Best objective over random ball points (interior draw plus its boundary
// projection, and the center). A lower bound on worst_case_quadratic.
double sampled_lower_bound(const HermitianMatrix& a, const CVec& x_hat, double eps, int samples,
                           std::uint64_t seed);

// Worst-case leakage decomposition at one primary receiver.
struct PuAudit {
  double dl = 0.0;     // sup over the DL channel ball of l^H (sum_k W_k) l
  double ul = 0.0;     // sup over the stacked UL ball of sum_j P_j |e_j|^2
  double total = 0.0;  // dl + ul
};

// Certificate that a solved allocation meets its leakage epigraph: every
// per-receiver worst case is recomputed from (W, P) alone and compared
// against tau.
struct LeakageAudit {
  std::vector<PuAudit> per_pu;
  double worst_total = 0.0;  // max over receivers
  double tau = 0.0;
  double rel_slack = 0.0;    // (tau - worst_total) / tau, 0 when tau == 0
  bool feasible = false;     // worst_total <= tau (1 + tol)
  bool tight = false;        // |worst_total - tau| <= tol * max(tau, worst_total)
};

LeakageAudit audit_leakage(const RobustInstance& inst, const std::vector<HermitianMatrix>& w,
                           const std::vector<double>& p_ul, double tau, double tol);

}  // namespace fdcr
