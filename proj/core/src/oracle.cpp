#include "fdcr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdcr/rng.hpp"

namespace fdcr {

namespace {

// ||(mu I - A)^{-1} A x_hat|| at mu = lo + omega, in eigencoordinates with
// precomputed gaps g_i = lo - lambda_i >= 0. The gap form keeps full relative
// precision when omega is many orders of magnitude below lo.
double secular_norm(const std::vector<double>& g, const std::vector<cplx>& b, double omega) {
  double s = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    const double m = std::abs(b[i]);
    if (m > 0.0) {
      const double q = m / (omega + g[i]);
      s += q * q;
    }
  }
  return std::sqrt(s);
}

}  // namespace

WorstCase worst_case_quadratic(const HermitianMatrix& a, const CVec& x_hat, double eps) {
  const int n = a.dim();
  if (static_cast<int>(x_hat.size()) != n)
    throw std::invalid_argument("worst_case_quadratic: dimension mismatch");
  if (!(eps >= 0.0)) throw std::invalid_argument("worst_case_quadratic: eps must be >= 0");

  WorstCase out;
  out.d.assign(n, cplx(0.0, 0.0));
  if (n == 0) return out;
  if (eps == 0.0) {
    out.value = a.quad_form(x_hat);
    return out;
  }

  const EigResult eg = hermitian_eig(a);
  const double lmax = eg.values.back();
  const double lo = std::max(lmax, 0.0);

  // x_hat and A x_hat in the eigenbasis
  std::vector<cplx> c(n), b(n);
  double bnorm2 = 0.0;
  for (int i = 0; i < n; ++i) {
    cplx ci(0.0, 0.0);
    for (int r = 0; r < n; ++r) ci += std::conj(eg.vectors(r, i)) * x_hat[r];
    c[i] = ci;
    b[i] = eg.values[i] * ci;
    bnorm2 += std::norm(b[i]);
  }
  const double bnorm = std::sqrt(bnorm2);

  // component of A x_hat on the eigencluster blocking mu = lo
  const double ctol = 1e-10 * std::max(1.0, std::abs(lo));
  double bclu2 = 0.0;
  for (int i = 0; i < n; ++i)
    if (lo - eg.values[i] <= ctol) bclu2 += std::norm(b[i]);

  std::vector<cplx> dt(n, cplx(0.0, 0.0));
  double mu = lo;
  bool boundary = true;
  bool need_bisect = true;

  if (std::sqrt(bclu2) <= 1e-12 * bnorm) {
    // The secular norm has a finite limit at lo: pseudo-inverse solution.
    double nrm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double den = lo - eg.values[i];
      if (den > ctol) {
        dt[i] = b[i] / den;
        nrm2 += std::norm(dt[i]);
      }
    }
    if (nrm2 <= eps * eps) {
      need_bisect = false;
      if (lmax > 0.0) {
        // Norm deficit filled along a top eigenvector keeps stationarity.
        dt[n - 1] += std::sqrt(eps * eps - nrm2);
      } else {
        boundary = false;  // concave objective, interior maximizer
        mu = 0.0;
      }
    } else {
      std::fill(dt.begin(), dt.end(), cplx(0.0, 0.0));
    }
  }

  if (need_bisect) {
    // The norm is strictly decreasing in omega = mu - lo and crosses eps in
    // (0, bnorm/eps]. Bisection runs on log(omega): the crossing can sit
    // hundreds of orders of magnitude below lo when A x_hat is nearly
    // orthogonal to the top eigenspace, and only a relative-width search
    // resolves it there.
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = std::max(lo - eg.values[i], 0.0);
    double llo = std::log(1e-300);
    double lhi = std::log(std::max(bnorm / eps, 1e-300));
    double omega = std::exp(lhi);
    for (int it = 0; it < 200; ++it) {
      const double lmid = 0.5 * (llo + lhi);
      omega = std::exp(lmid);
      const double f = secular_norm(g, b, omega);
      if (std::abs(f - eps) <= 1e-10 * eps) break;
      (f > eps ? llo : lhi) = lmid;
      if (lhi - llo <= 1e-13) break;
    }
    mu = lo + omega;
    for (int i = 0; i < n; ++i) dt[i] = b[i] / (omega + g[i]);
  }

  CVec y(x_hat);
  for (int r = 0; r < n; ++r) {
    cplx s(0.0, 0.0);
    for (int i = 0; i < n; ++i) s += eg.vectors(r, i) * dt[i];
    out.d[r] = s;
    y[r] += s;
  }
  out.value = a.quad_form(y);
  out.multiplier = mu;
  out.boundary = boundary;
  return out;
}

double sampled_lower_bound(const HermitianMatrix& a, const CVec& x_hat, double eps, int samples,
                           std::uint64_t seed) {
  const int n = a.dim();
  if (static_cast<int>(x_hat.size()) != n)
    throw std::invalid_argument("sampled_lower_bound: dimension mismatch");
  if (n == 0) return 0.0;
  double best = a.quad_form(x_hat);
  if (eps <= 0.0) return best;
  Rng rng(seed);
  CVec y(n);
  for (int s = 0; s < samples; ++s) {
    const CVec d = rng.uniform_ball(n, eps);
    for (int r = 0; r < n; ++r) y[r] = x_hat[r] + d[r];
    best = std::max(best, a.quad_form(y));
    const double nd = vnorm(d);
    if (nd > 0.0) {
      const double f = eps / nd;
      for (int r = 0; r < n; ++r) y[r] = x_hat[r] + f * d[r];
      best = std::max(best, a.quad_form(y));
    }
  }
  return best;
}

LeakageAudit audit_leakage(const RobustInstance& inst, const std::vector<HermitianMatrix>& w,
                           const std::vector<double>& p_ul, double tau, double tol) {
  const int nt = inst.cfg.N_T;
  const int j_users = inst.cfg.J;
  const int r_count = inst.cfg.R;
  if (static_cast<int>(p_ul.size()) != j_users)
    throw std::invalid_argument("audit_leakage: p_ul size mismatch");

  HermitianMatrix wsum(nt);
  for (const HermitianMatrix& wk : w) {
    if (wk.dim() != nt) throw std::invalid_argument("audit_leakage: covariance dim mismatch");
    wsum.add_scaled(wk, 1.0);
  }
  HermitianMatrix pdiag(j_users);
  for (int j = 0; j < j_users; ++j) pdiag.set(j, j, p_ul[j]);

  LeakageAudit out;
  out.tau = tau;
  for (int r = 0; r < r_count; ++r) {
    PuAudit pa;
    pa.dl = worst_case_quadratic(wsum, inst.primary.l_hat[r], inst.primary.eps_dl[r]).value;
    CVec ecol(j_users);
    for (int j = 0; j < j_users; ++j) ecol[j] = inst.primary.e_hat(j, r);
    pa.ul = worst_case_quadratic(pdiag, ecol, inst.primary.eps_ul_stacked[r]).value;
    pa.total = pa.dl + pa.ul;
    out.worst_total = std::max(out.worst_total, pa.total);
    out.per_pu.push_back(pa);
  }
  out.rel_slack = tau > 0.0 ? (tau - out.worst_total) / tau : 0.0;
  out.feasible = out.worst_total <= tau * (1.0 + tol);
  out.tight = std::abs(out.worst_total - tau) <= tol * std::max(tau, out.worst_total);
  return out;
}

}  // namespace fdcr
