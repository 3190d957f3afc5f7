#pragma once

#include <stdexcept>
#include <vector>

#include "fdcr/problem.hpp"
#include "fdcr/solver.hpp"

namespace fdcr {

// Raised when the rank-one stage cannot certify or construct a rank-one
// allocation; callers flag the trial and exclude it from averages.
class RecoveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Count of eigenvalues above tol * lambda_max. Scale free; 0 for matrices
// with no positive eigenvalue.
int numeric_rank(const HermitianMatrix& w, double tol = 1e-6);

// Dominant eigenpair factor sqrt(lambda_max) * u_max with the global phase
// fixed so the largest-magnitude entry is real positive. The zero matrix maps
// to the zero vector. Throws std::invalid_argument unless numeric_rank(w, tol)
// is at most one.
CVec extract_beamformer(const HermitianMatrix& w, double tol = 1e-6);

// Transmit allocation with every downlink covariance certified rank one.
// w_cov[k] is the certified covariance and w[k] its factor, so
// w[k] w[k]^H reconstructs w_cov[k] within 1e-6 * Tr(w_cov[k]).
struct BeamformingSolution {
  std::vector<HermitianMatrix> w_cov;
  std::vector<CVec> w;
  FrozenScalars scalars;      // uplink powers, leakage epigraph, slacks
  bool repaired = false;      // true when the tie-break re-solve ran
  SolveReport repair_report;  // populated only when repaired
};

// Rank-one allocation from a solved relaxation. Extracts directly when every
// covariance already passes the rank test. Otherwise re-solves with a total
// transmit power tie-break (weight 1e-4 * tau* / achieved power) whose
// minimizer is rank one; the tie-break moves the epigraph by O(weight^2), and
// the repair is rejected if the certified epigraph in scalars.tau exceeds the
// relaxed optimum by more than 5e-7 relative. Throws RecoveryError when the
// re-solve fails, drifts past that gate, or still is not rank one.
BeamformingSolution recover(const RobustInstance& inst, const BuiltProblem& relaxed,
                            const SolveReport& report, const SolverSettings& settings = {},
                            double rank_tol = 1e-6);

}  // namespace fdcr
