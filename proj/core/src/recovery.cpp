#include "fdcr/recovery.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace fdcr {

int numeric_rank(const HermitianMatrix& w, double tol) {
  if (w.dim() == 0) return 0;
  const EigResult eg = hermitian_eig(w);
  const double lmax = eg.values.back();
  if (lmax <= 0.0) return 0;
  int rank = 0;
  for (double v : eg.values)
    if (v > tol * lmax) ++rank;
  return rank;
}

CVec extract_beamformer(const HermitianMatrix& w, double tol) {
  const int n = w.dim();
  CVec out(n, cplx(0.0, 0.0));
  if (n == 0) return out;
  const EigResult eg = hermitian_eig(w);
  const double lmax = eg.values.back();
  if (lmax <= 0.0) return out;
  int rank = 0;
  for (double v : eg.values)
    if (v > tol * lmax) ++rank;
  if (rank > 1) throw std::invalid_argument("extract_beamformer: matrix is not rank one");

  const double scale = std::sqrt(lmax);
  int top = n - 1;
  for (int r = 0; r < n; ++r) out[r] = scale * eg.vectors(r, top);

  // global phase: largest-magnitude entry real positive
  int imax = 0;
  for (int r = 1; r < n; ++r)
    if (std::abs(out[r]) > std::abs(out[imax])) imax = r;
  const double m = std::abs(out[imax]);
  if (m > 0.0) {
    const cplx rot = std::conj(out[imax]) / m;
    for (auto& v : out) v *= rot;
    out[imax] = cplx(m, 0.0);
  }
  return out;
}

namespace {

// Dominant unit eigenvector of each covariance in the solved problem.
std::vector<CVec> dominant_directions(const BuiltProblem& built, const std::vector<double>& u) {
  std::vector<CVec> dirs;
  for (const MatrixVar& mv : built.handles.w) {
    const HermitianMatrix wk = built.prob.extract_hermitian(mv, u);
    const EigResult eg = hermitian_eig(wk);
    if (!(eg.values.back() > 0.0))
      throw RecoveryError("rank repair: a downlink covariance has no positive eigenvalue");
    dirs.push_back(eg.vectors.column(wk.dim() - 1));
  }
  return dirs;
}

}  // namespace

BeamformingSolution recover(const RobustInstance& inst, const BuiltProblem& relaxed,
                            const SolveReport& report, const SolverSettings& settings,
                            double rank_tol) {
  if (report.status != SolveStatus::optimal)
    throw std::invalid_argument("recover: relaxation report is not optimal");

  BeamformingSolution sol;
  sol.scalars = extract_scalars(relaxed, report.u);

  bool all_rank_one = true;
  for (const MatrixVar& mv : relaxed.handles.w) {
    sol.w_cov.push_back(relaxed.prob.extract_hermitian(mv, report.u));
    if (numeric_rank(sol.w_cov.back(), rank_tol) > 1) all_rank_one = false;
  }

  if (!all_rank_one) {
    // Stage 1: trace solve with the epigraph capped a hair above the optimum.
    // The cap restores a strictly feasible point and the minimum-total-power
    // point is rank one, but the trace objective sits at transmit-power scale,
    // six orders above leakage, so only its directions are trustworthy.
    const double tau_star = sol.scalars.tau;
    const BuiltProblem aux = build_auxiliary(inst, tau_star * (1.0 + 1e-7));
    SolveReport aux_rep = solve(aux.prob, settings);
    if (aux_rep.status != SolveStatus::optimal)
      throw RecoveryError("rank repair trace stage did not reach optimality: " + aux_rep.message);

    // Stage 2: lock those directions and re-solve the epigraph program. Its
    // objective is the leakage bound itself, so the solve certifies tau at
    // full precision, and W_k = p_k d_k d_k^H is rank one by construction.
    const std::vector<CVec> dirs = dominant_directions(aux, aux_rep.u);
    const BuiltProblem locked = build_fixed_directions(inst, dirs);
    SolveReport locked_rep = solve(locked.prob, settings);
    if (locked_rep.status != SolveStatus::optimal)
      throw RecoveryError("rank repair locked stage did not reach optimality: " +
                          locked_rep.message);
    const double tau_locked = locked_rep.u[locked.handles.tau];
    if (!(tau_locked <= tau_star * (1.0 + 5e-7)))
      throw RecoveryError("rank repair drifted from the relaxed optimum: locked epigraph " +
                          std::to_string(tau_locked) + " vs " + std::to_string(tau_star));

    sol.scalars = extract_scalars(locked, locked_rep.u);
    sol.w_cov.clear();
    for (int k = 0; k < inst.cfg.K; ++k) {
      const double p = std::max(locked_rep.u[locked.handles.p_dl[k]], 0.0);
      CVec col = locked.handles.dl_dirs[k];
      const double amp = std::sqrt(p);
      for (cplx& x : col) x *= amp;
      sol.w_cov.push_back(HermitianMatrix::outer(col));
    }
    sol.repaired = true;
    sol.trace_report = std::move(aux_rep);
    sol.locked_report = std::move(locked_rep);
  }

  for (const HermitianMatrix& wc : sol.w_cov) sol.w.push_back(extract_beamformer(wc, rank_tol));
  return sol;
}

}  // namespace fdcr
