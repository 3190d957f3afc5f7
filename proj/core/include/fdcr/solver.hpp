#pragma once

#include <string>
#include <vector>

#include "fdcr/problem.hpp"

namespace fdcr {

struct SolverSettings {
  double gap_tol = 1e-8;    // relative duality gap at which iteration stops
  double feas_tol = 1e-9;   // scaled primal/dual residual target
  double accept_gap = 1e-7;   // best iterate is still accepted at these levels
  double accept_feas = 1e-7;  // when the interior-point endgame breaks down
  double inf_tol = 1e-8;    // normalized improving-ray residual
  int max_iter = 100;
};

enum class SolveStatus { optimal, infeasible, numerical_failure };

// Scaled-space diagnostics recorded once per iterate. The identity
//   pobj - dobj - resid_correction == gap_term
// holds to roundoff, and gap_term = <S,Z>/tau^2 >= 0 is the cone pairing, so
// weak duality is violated only through the (vanishing) residual term.
struct IterStat {
  double pobj = 0.0;
  double dobj = 0.0;
  double gap_term = 0.0;
  double resid_correction = 0.0;
  double pres = 0.0;
  double dres = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  std::vector<double> u;  // parameter values in original units (status optimal)
  // One Hermitian dual multiplier per block, in original units. For status
  // infeasible this holds the normalized improving ray instead.
  std::vector<HermitianMatrix> block_duals;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double rel_gap = 0.0;
  double primal_residual = 0.0;  // scaled-space residuals at exit
  double dual_residual = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  std::string message;
  std::vector<IterStat> trace;
};

// Homogeneous self-dual interior-point method over the real symmetric
// embedding of all blocks, with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector. Deterministic for identical input.
SolveReport solve(const ConicProblem& p, const SolverSettings& settings = {});

struct KktResiduals {
  double stationarity = 0.0;     // max_i scaled |c_i - sum_b <G_bi, Z_b>|
  double complementarity = 0.0;  // max_b scaled ||S_b Z_b||_F
  double primal_violation = 0.0;  // max_b scaled eigenvalue deficit of S_b(u)
  double dual_violation = 0.0;    // max_b scaled eigenvalue deficit of Z_b

  double worst() const {
    double w = stationarity;
    if (complementarity > w) w = complementarity;
    if (primal_violation > w) w = primal_violation;
    if (dual_violation > w) w = dual_violation;
    return w;
  }
};

// Residuals of the optimality system evaluated on the original (unscaled)
// problem data; meaningful for status == optimal.
KktResiduals kkt_residuals(const ConicProblem& p, const SolveReport& rep);

}  // namespace fdcr
