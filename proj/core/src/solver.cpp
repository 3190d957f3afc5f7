#include "fdcr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdcr/linalg.hpp"

namespace fdcr {
namespace {

using std::size_t;

// Dense square real matrix, row-major. Plain scratch type for solver internals.
struct Dense {
  int n = 0;
  std::vector<double> a;

  Dense() = default;
  explicit Dense(int dim) : n(dim), a(static_cast<size_t>(dim) * dim, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * n + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * n + c]; }
  void assign_zero(int dim) {
    n = dim;
    a.assign(static_cast<size_t>(dim) * dim, 0.0);
  }
};

// C = A * B
void mul(const Dense& A, const Dense& B, Dense& C) {
  const int n = A.n;
  C.assign_zero(n);
  for (int i = 0; i < n; ++i) {
    const double* arow = &A.a[static_cast<size_t>(i) * n];
    double* crow = &C.a[static_cast<size_t>(i) * n];
    for (int k = 0; k < n; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &B.a[static_cast<size_t>(k) * n];
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C = A^T * B
void mul_tn(const Dense& A, const Dense& B, Dense& C) {
  const int n = A.n;
  C.assign_zero(n);
  for (int k = 0; k < n; ++k) {
    const double* arow = &A.a[static_cast<size_t>(k) * n];
    const double* brow = &B.a[static_cast<size_t>(k) * n];
    for (int i = 0; i < n; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &C.a[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
}

// C = A * B^T
void mul_nt(const Dense& A, const Dense& B, Dense& C) {
  const int n = A.n;
  C.assign_zero(n);
  for (int i = 0; i < n; ++i) {
    const double* arow = &A.a[static_cast<size_t>(i) * n];
    for (int j = 0; j < n; ++j) {
      const double* brow = &B.a[static_cast<size_t>(j) * n];
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += arow[k] * brow[k];
      C.at(i, j) = s;
    }
  }
}

double ddot(const Dense& A, const Dense& B) {
  double s = 0.0;
  for (size_t i = 0; i < A.a.size(); ++i) s += A.a[i] * B.a[i];
  return s;
}

double fnorm2(const Dense& A) { return ddot(A, A); }

void symmetrize(Dense& A) {
  for (int r = 0; r < A.n; ++r)
    for (int c = r + 1; c < A.n; ++c) {
      const double v = 0.5 * (A.at(r, c) + A.at(c, r));
      A.at(r, c) = v;
      A.at(c, r) = v;
    }
}

// In-place inverse of a lower-triangular factor; upper part must be zero.
bool tri_lower_inverse(Dense& L) {
  const int n = L.n;
  for (int j = 0; j < n; ++j) {
    const double d = L.at(j, j);
    if (d == 0.0 || !std::isfinite(d)) return false;
    L.at(j, j) = 1.0 / d;
    for (int i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s += L.at(i, k) * L.at(k, j);
      L.at(i, j) = -s / L.at(i, i);
    }
  }
  return true;
}

// One symmetric coefficient entry of the real embedding: value at (row,col)
// and mirrored at (col,row).
struct REntry {
  int param;
  int row, col;  // row <= col
  double val;
};

// One PSD block after equilibration and real embedding. Complex 1x1 blocks
// stay one-dimensional; larger blocks double in size.
struct SBlock {
  int cdim = 0;
  int rdim = 0;
  Dense g0;
  std::vector<REntry> ents;                 // sorted by param
  std::vector<int> plist;                   // distinct params, ascending
  std::vector<std::pair<int, int>> prange;  // [begin,end) into ents per plist item
};

double sym_dot(const std::vector<REntry>& ents, int begin, int end, const Dense& X) {
  double s = 0.0;
  for (int k = begin; k < end; ++k) {
    const REntry& e = ents[k];
    s += e.val * X.at(e.row, e.col) * (e.row == e.col ? 1.0 : 2.0);
  }
  return s;
}

// out = tcoef * g0 + sum_p ucoef[p] * G_p
void eval_affine(const SBlock& b, const std::vector<double>& ucoef, double tcoef, Dense& out) {
  out.assign_zero(b.rdim);
  if (tcoef != 0.0)
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] = tcoef * b.g0.a[i];
  for (const REntry& e : b.ents) {
    const double v = ucoef[e.param] * e.val;
    if (v == 0.0) continue;
    out.at(e.row, e.col) += v;
    if (e.row != e.col) out.at(e.col, e.row) += v;
  }
}

void accum_adjoint(const SBlock& b, const Dense& X, std::vector<double>& out) {
  for (size_t k = 0; k < b.plist.size(); ++k)
    out[b.plist[k]] += sym_dot(b.ents, b.prange[k].first, b.prange[k].second, X);
}

// Diagonal congruence scales per block (complex-level rows) plus per-variable
// and objective scalars. Exactly invertible; chosen by Ruiz-style sweeps so
// every row and every variable column ends with max magnitude near one.
struct Scaling {
  std::vector<std::vector<double>> row;
  std::vector<double> var;
  double obj = 1.0;
};

Scaling equilibrate(const ConicProblem& p) {
  const auto& blocks = p.blocks();
  Scaling sc;
  sc.row.resize(blocks.size());
  for (size_t b = 0; b < blocks.size(); ++b) sc.row[b].assign(blocks[b].dim, 1.0);
  sc.var.assign(p.num_params(), 1.0);

  for (int sweep = 0; sweep < 8; ++sweep) {
    for (size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      auto& s = sc.row[b];
      std::vector<double> m(blk.dim, 0.0);
      for (int r = 0; r < blk.dim; ++r)
        for (int c = 0; c < blk.dim; ++c) {
          const double v = std::abs(blk.constant(r, c)) * s[r] * s[c];
          if (v > m[r]) m[r] = v;
        }
      for (const auto& e : blk.entries) {
        const double v = std::abs(e.coeff) * sc.var[e.param] * s[e.r] * s[e.c];
        if (v > m[e.r]) m[e.r] = v;
        if (v > m[e.c]) m[e.c] = v;
      }
      for (int r = 0; r < blk.dim; ++r)
        if (m[r] > 0.0) s[r] /= std::sqrt(m[r]);
    }
    std::vector<double> vm(p.num_params(), 0.0);
    for (size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      const auto& s = sc.row[b];
      for (const auto& e : blk.entries) {
        const double v = std::abs(e.coeff) * sc.var[e.param] * s[e.r] * s[e.c];
        if (v > vm[e.param]) vm[e.param] = v;
      }
    }
    for (int j = 0; j < p.num_params(); ++j)
      if (vm[j] > 0.0) sc.var[j] /= std::sqrt(vm[j]);
  }

  double gmax = 0.0;
  const auto& obj = p.objective();
  for (int j = 0; j < p.num_params(); ++j) gmax = std::max(gmax, std::abs(obj[j]) * sc.var[j]);
  sc.obj = gmax > 0.0 ? 1.0 / gmax : 1.0;
  return sc;
}

std::vector<SBlock> embed_blocks(const ConicProblem& p, const Scaling& sc) {
  const auto& blocks = p.blocks();
  std::vector<SBlock> out(blocks.size());
  for (size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    const auto& s = sc.row[b];
    SBlock& sb = out[b];
    const int d = blk.dim;
    sb.cdim = d;
    sb.rdim = d == 1 ? 1 : 2 * d;
    sb.g0.assign_zero(sb.rdim);
    if (d == 1) {
      sb.g0.at(0, 0) = blk.constant(0, 0).real() * s[0] * s[0];
    } else {
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          const cplx v = blk.constant(r, c) * (s[r] * s[c]);
          sb.g0.at(r, c) = v.real();
          sb.g0.at(r + d, c + d) = v.real();
          sb.g0.at(r, c + d) = -v.imag();
          sb.g0.at(r + d, c) = v.imag();
        }
    }
    for (const auto& e : blk.entries) {
      const cplx v = e.coeff * (sc.var[e.param] * s[e.r] * s[e.c]);
      const double re = v.real(), im = v.imag();
      if (d == 1) {
        sb.ents.push_back({e.param, 0, 0, re});
        continue;
      }
      if (e.r == e.c) {
        if (re != 0.0) {
          sb.ents.push_back({e.param, e.r, e.r, re});
          sb.ents.push_back({e.param, e.r + d, e.r + d, re});
        }
        continue;
      }
      if (re != 0.0) {
        sb.ents.push_back({e.param, e.r, e.c, re});
        sb.ents.push_back({e.param, e.r + d, e.c + d, re});
      }
      if (im != 0.0) {
        sb.ents.push_back({e.param, e.r, e.c + d, -im});
        sb.ents.push_back({e.param, e.c, e.r + d, im});
      }
    }
    std::sort(sb.ents.begin(), sb.ents.end(), [](const REntry& x, const REntry& y) {
      if (x.param != y.param) return x.param < y.param;
      if (x.row != y.row) return x.row < y.row;
      return x.col < y.col;
    });
    for (size_t k = 0; k < sb.ents.size();) {
      size_t e = k;
      while (e < sb.ents.size() && sb.ents[e].param == sb.ents[k].param) ++e;
      sb.plist.push_back(sb.ents[k].param);
      sb.prange.emplace_back(static_cast<int>(k), static_cast<int>(e));
      k = e;
    }
  }
  return out;
}

// Re tr(A B) for Hermitian A, B.
double herm_dot(const HermitianMatrix& a, const HermitianMatrix& b) {
  double s = 0.0;
  for (int r = 0; r < a.dim(); ++r)
    for (int c = 0; c < a.dim(); ++c) {
      const cplx x = a(r, c), y = b(r, c);
      s += x.real() * y.real() + x.imag() * y.imag();
    }
  return s;
}

struct BlockWork {
  Dense S, Z;
  Dense R, Rinv, Winv;
  std::vector<double> lam;
  Dense Y0;            // Winv g0 Winv
  Dense Rp;            // primal residual
  Dense X;             // Winv (R Dtilde R^T - Rp) Winv for the current rhs
  Dense dS, dZ;        // current Newton direction
  Dense dSaff, dZaff;  // affine direction kept for the corrector
  Dense t1, t2, t3;    // scratch
};

struct Metrics {
  double mu = 0.0;
  double pres = 0.0, dres = 0.0;
  double relgap = 0.0;
  double pobj = 0.0, dobj = 0.0;
  double gap_term = 0.0, resid_corr = 0.0;
  double hz = 0.0;  // <G0, Z> in scaled space
};

struct Snapshot {
  std::vector<double> u;
  double tau = 1.0, kappa = 1.0;
  std::vector<Dense> S, Z;
  bool set = false;
};

class Hsd {
 public:
  Hsd(const ConicProblem& p, const SolverSettings& st, const Scaling& sc)
      : prob_(p), st_(st), sc_(sc), n_(p.num_params()) {
    B_ = embed_blocks(p, sc_);
    gamma_.resize(n_);
    for (int j = 0; j < n_; ++j) gamma_[j] = p.objective()[j] * sc_.var[j] * sc_.obj;
    double g2 = 0.0, c2 = 0.0;
    nu_ = 0.0;
    for (const auto& b : B_) {
      nu_ += b.rdim;
      g2 += fnorm2(b.g0);
    }
    for (double g : gamma_) c2 += g * g;
    g0norm_ = std::sqrt(g2);
    gnorm_ = std::sqrt(c2);
    u_.assign(n_, 0.0);
    W_.resize(B_.size());
    for (size_t b = 0; b < B_.size(); ++b) {
      const int m = B_[b].rdim;
      W_[b].S.assign_zero(m);
      W_[b].Z.assign_zero(m);
      for (int i = 0; i < m; ++i) {
        W_[b].S.at(i, i) = 1.0;
        W_[b].Z.at(i, i) = 1.0;
      }
    }
    M_.assign_zero(n_);
    Mfact_.assign_zero(n_);
    rd_.assign(n_, 0.0);
    pvec_.assign(n_, 0.0);
    v2_.assign(n_, 0.0);
    xvec_.assign(n_, 0.0);
  }

  SolveReport run();

 private:
  Metrics metrics();
  bool nt_scale_all();
  bool build_schur();
  void msolve(std::vector<double>& x) const;
  void prepare_common();
  struct Step {
    std::vector<double> du;
    double dtau = 0.0, dkappa = 0.0;
  };
  Step solve_newton(double s0, double t);
  double psd_boundary(const Dense& A, const Dense& dA, double cap);
  double boundary_all(bool affine, double dtau, double dkappa);
  double mu_after(double alpha, bool affine, double dtau, double dkappa);
  void save_snapshot(Snapshot& s) const;
  void restore_snapshot(const Snapshot& s);
  HermitianMatrix complexify(size_t b, const Dense& Zr, double divide) const;
  bool certify_infeasible(SolveReport& rep) const;
  void fill_optimal(SolveReport& rep, const Metrics& mt) const;

  const ConicProblem& prob_;
  SolverSettings st_;
  Scaling sc_;
  int n_;
  std::vector<SBlock> B_;
  std::vector<double> gamma_;
  double nu_ = 0.0, g0norm_ = 0.0, gnorm_ = 0.0;

  std::vector<BlockWork> W_;
  std::vector<double> u_;
  double tau_ = 1.0, kappa_ = 1.0;

  Dense M_, Mfact_;
  std::vector<double> rd_, pvec_, v2_, xvec_;
  double rg_ = 0.0, den_ = 0.0;
  std::vector<double> scratch_;
};

Metrics Hsd::metrics() {
  Metrics mt;
  double rp2 = 0.0, sz = 0.0, rpz = 0.0;
  for (size_t b = 0; b < B_.size(); ++b) {
    BlockWork& wk = W_[b];
    eval_affine(B_[b], u_, tau_, wk.t1);
    wk.Rp.assign_zero(B_[b].rdim);
    for (size_t i = 0; i < wk.t1.a.size(); ++i) wk.Rp.a[i] = wk.t1.a[i] - wk.S.a[i];
    rp2 += fnorm2(wk.Rp);
    sz += ddot(wk.S, wk.Z);
    rpz += ddot(wk.Rp, wk.Z);
  }
  std::fill(rd_.begin(), rd_.end(), 0.0);
  for (size_t b = 0; b < B_.size(); ++b) accum_adjoint(B_[b], W_[b].Z, rd_);
  mt.hz = 0.0;
  for (size_t b = 0; b < B_.size(); ++b) mt.hz += ddot(B_[b].g0, W_[b].Z);
  double cu = 0.0, urd = 0.0, rd2 = 0.0;
  for (int j = 0; j < n_; ++j) {
    rd_[j] -= tau_ * gamma_[j];
    cu += gamma_[j] * u_[j];
    urd += u_[j] * rd_[j];
    rd2 += rd_[j] * rd_[j];
  }
  rg_ = -cu - mt.hz - kappa_;

  const double t2 = tau_ * tau_;
  mt.mu = (sz + tau_ * kappa_) / (nu_ + 1.0);
  mt.pres = std::sqrt(rp2) / (tau_ * (1.0 + g0norm_));
  mt.dres = std::sqrt(rd2) / (tau_ * (1.0 + gnorm_));
  mt.pobj = cu / tau_;
  mt.dobj = -mt.hz / tau_;
  mt.gap_term = sz / t2;
  mt.resid_corr = (rpz - urd) / t2;
  mt.relgap = mt.gap_term / std::max({1.0, std::abs(mt.pobj), std::abs(mt.dobj)});
  return mt;
}

bool Hsd::nt_scale_all() {
  std::vector<double> evals;
  Dense evecs;
  for (size_t b = 0; b < B_.size(); ++b) {
    BlockWork& wk = W_[b];
    const int m = B_[b].rdim;
    Dense L = wk.S;
    if (!cholesky_in_place(m, L.a.data())) return false;
    for (int r = 0; r < m; ++r)
      for (int c = r + 1; c < m; ++c) L.at(r, c) = 0.0;
    mul(wk.Z, L, wk.t1);
    mul_tn(L, wk.t1, wk.t2);
    symmetrize(wk.t2);
    evals.assign(m, 0.0);
    evecs.assign_zero(m);
    if (!sym_jacobi_eig(m, wk.t2.a.data(), evals.data(), evecs.a.data())) return false;
    if (evals.front() <= 0.0) return false;
    mul(L, evecs, wk.t1);  // L U
    wk.R.assign_zero(m);
    wk.lam.assign(m, 0.0);
    for (int j = 0; j < m; ++j) {
      const double tq = std::pow(evals[j], -0.25);
      wk.lam[j] = std::sqrt(evals[j]);
      for (int i = 0; i < m; ++i) wk.R.at(i, j) = wk.t1.at(i, j) * tq;
    }
    if (!tri_lower_inverse(L)) return false;
    mul_tn(evecs, L, wk.t1);  // U^T L^{-1}
    wk.Rinv.assign_zero(m);
    for (int i = 0; i < m; ++i) {
      const double tq = std::pow(evals[i], 0.25);
      for (int j = 0; j < m; ++j) wk.Rinv.at(i, j) = wk.t1.at(i, j) * tq;
    }
    mul_tn(wk.Rinv, wk.Rinv, wk.Winv);
    symmetrize(wk.Winv);
  }
  return true;
}

bool Hsd::build_schur() {
  M_.assign_zero(n_);
  Dense V;
  for (size_t b = 0; b < B_.size(); ++b) {
    const SBlock& sb = B_[b];
    const Dense& Wi = W_[b].Winv;
    const int m = sb.rdim;
    for (size_t jj = 0; jj < sb.plist.size(); ++jj) {
      V.assign_zero(m);
      for (int k = sb.prange[jj].first; k < sb.prange[jj].second; ++k) {
        const REntry& e = sb.ents[k];
        const double* wr = &Wi.a[static_cast<size_t>(e.row) * m];
        const double* wc = &Wi.a[static_cast<size_t>(e.col) * m];
        if (e.row == e.col) {
          for (int i = 0; i < m; ++i) {
            const double f = e.val * wr[i];
            double* vrow = &V.a[static_cast<size_t>(i) * m];
            for (int j = 0; j < m; ++j) vrow[j] += f * wr[j];
          }
        } else {
          for (int i = 0; i < m; ++i) {
            const double fr = e.val * wr[i];
            const double fc = e.val * wc[i];
            double* vrow = &V.a[static_cast<size_t>(i) * m];
            for (int j = 0; j < m; ++j) vrow[j] += fr * wc[j] + fc * wr[j];
          }
        }
      }
      for (size_t ii = 0; ii <= jj; ++ii)
        M_.at(sb.plist[ii], sb.plist[jj]) +=
            sym_dot(sb.ents, sb.prange[ii].first, sb.prange[ii].second, V);
    }
  }
  for (int r = 0; r < n_; ++r)
    for (int c = r + 1; c < n_; ++c) M_.at(c, r) = M_.at(r, c);

  double dmax = 0.0;
  for (int j = 0; j < n_; ++j) dmax = std::max(dmax, M_.at(j, j));
  for (double rel : {0.0, 1e-14, 1e-11, 1e-8}) {
    Mfact_ = M_;
    if (cholesky_in_place(n_, Mfact_.a.data(), rel * dmax)) return true;
  }
  return false;
}

void Hsd::msolve(std::vector<double>& x) const {
  cholesky_solve(n_, Mfact_.a.data(), x.data());
}

void Hsd::prepare_common() {
  std::fill(pvec_.begin(), pvec_.end(), 0.0);
  for (size_t b = 0; b < B_.size(); ++b) {
    BlockWork& wk = W_[b];
    mul(wk.Winv, B_[b].g0, wk.t1);
    mul(wk.t1, wk.Winv, wk.Y0);
    symmetrize(wk.Y0);
    accum_adjoint(B_[b], wk.Y0, pvec_);
  }
  // den_ = gamma' M^-1 gamma + || P_perp(scaled g0) ||^2 + kappa/tau, a sum of
  // nonnegative pieces. The equivalent signed form g00 + (p - gamma)' v2
  // cancels catastrophically near the optimum and can go negative in doubles.
  std::vector<double> y1(gamma_), y2(pvec_);
  msolve(y1);
  msolve(y2);
  for (int j = 0; j < n_; ++j) v2_[j] = -(y1[j] + y2[j]);
  double gam = 0.0;
  for (int j = 0; j < n_; ++j) gam += gamma_[j] * y1[j];
  double resid = 0.0;
  for (size_t b = 0; b < B_.size(); ++b) {
    BlockWork& wk = W_[b];
    eval_affine(B_[b], y2, -1.0, wk.t1);  // A(y2) - g0
    mul(wk.Rinv, wk.t1, wk.t2);
    mul_nt(wk.t2, wk.Rinv, wk.t3);
    resid += ddot(wk.t3, wk.t3);
  }
  den_ = std::max(gam, 0.0) + resid + kappa_ / tau_;
}

Hsd::Step Hsd::solve_newton(double s0, double t) {
  Step st;
  std::vector<double> v1(n_);
  for (int j = 0; j < n_; ++j) v1[j] = xvec_[j] + rd_[j];
  msolve(v1);
  double pg_v1 = 0.0;
  for (int j = 0; j < n_; ++j) pg_v1 += (pvec_[j] - gamma_[j]) * v1[j];
  st.dtau = (s0 - rg_ - pg_v1 + t / tau_) / den_;
  st.du.resize(n_);
  for (int j = 0; j < n_; ++j) st.du[j] = v1[j] + st.dtau * v2_[j];
  st.dkappa = (t - kappa_ * st.dtau) / tau_;
  for (size_t b = 0; b < B_.size(); ++b) {
    BlockWork& wk = W_[b];
    eval_affine(B_[b], st.du, st.dtau, wk.t1);  // Q = A(du) + dtau g0
    mul(wk.Winv, wk.t1, wk.t2);
    mul(wk.t2, wk.Winv, wk.t3);
    wk.dZ.assign_zero(B_[b].rdim);
    for (size_t i = 0; i < wk.dZ.a.size(); ++i) wk.dZ.a[i] = wk.X.a[i] - wk.t3.a[i];
    symmetrize(wk.dZ);
    wk.dS.assign_zero(B_[b].rdim);
    for (size_t i = 0; i < wk.dS.a.size(); ++i) wk.dS.a[i] = wk.t1.a[i] + wk.Rp.a[i];
  }
  return st;
}

double Hsd::psd_boundary(const Dense& A, const Dense& dA, double cap) {
  const int m = A.n;
  auto ok = [&](double al) {
    scratch_.resize(A.a.size());
    for (size_t i = 0; i < A.a.size(); ++i) scratch_[i] = A.a[i] + al * dA.a[i];
    return cholesky_in_place(m, scratch_.data());
  };
  if (ok(cap)) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

double Hsd::boundary_all(bool affine, double dtau, double dkappa) {
  double cap = 1.0;
  if (dtau < 0.0) cap = std::min(cap, -tau_ / dtau);
  if (dkappa < 0.0) cap = std::min(cap, -kappa_ / dkappa);
  for (size_t b = 0; b < B_.size(); ++b) {
    const BlockWork& wk = W_[b];
    const Dense& ds = affine ? wk.dSaff : wk.dS;
    const Dense& dz = affine ? wk.dZaff : wk.dZ;
    cap = psd_boundary(wk.S, ds, cap);
    cap = psd_boundary(wk.Z, dz, cap);
  }
  return cap;
}

double Hsd::mu_after(double alpha, bool affine, double dtau, double dkappa) {
  double sz = 0.0;
  for (size_t b = 0; b < B_.size(); ++b) {
    const BlockWork& wk = W_[b];
    const Dense& ds = affine ? wk.dSaff : wk.dS;
    const Dense& dz = affine ? wk.dZaff : wk.dZ;
    sz += ddot(wk.S, wk.Z) + alpha * (ddot(ds, wk.Z) + ddot(wk.S, dz)) + alpha * alpha * ddot(ds, dz);
  }
  const double tk = (tau_ + alpha * dtau) * (kappa_ + alpha * dkappa);
  return (sz + tk) / (nu_ + 1.0);
}

void Hsd::save_snapshot(Snapshot& s) const {
  s.u = u_;
  s.tau = tau_;
  s.kappa = kappa_;
  s.S.resize(W_.size());
  s.Z.resize(W_.size());
  for (size_t b = 0; b < W_.size(); ++b) {
    s.S[b] = W_[b].S;
    s.Z[b] = W_[b].Z;
  }
  s.set = true;
}

void Hsd::restore_snapshot(const Snapshot& s) {
  u_ = s.u;
  tau_ = s.tau;
  kappa_ = s.kappa;
  for (size_t b = 0; b < W_.size(); ++b) {
    W_[b].S = s.S[b];
    W_[b].Z = s.Z[b];
  }
}

// Recover the Hermitian dual of block b from the real iterate: the embedding
// pairing doubles, so off 1x1 blocks the complex multiplier is the SUM of the
// two diagonal copies. Congruence and objective scales are undone here.
HermitianMatrix Hsd::complexify(size_t b, const Dense& Zr, double divide) const {
  const auto& blk = prob_.blocks()[b];
  const auto& s = sc_.row[b];
  const int d = blk.dim;
  HermitianMatrix out(d);
  const double inv = 1.0 / (divide * sc_.obj);
  if (d == 1) {
    out.set(0, 0, Zr.at(0, 0) * s[0] * s[0] * inv);
    return out;
  }
  for (int r = 0; r < d; ++r) {
    out.set(r, r, (Zr.at(r, r) + Zr.at(r + d, r + d)) * s[r] * s[r] * inv);
    for (int c = r + 1; c < d; ++c) {
      const double re = Zr.at(r, c) + Zr.at(r + d, c + d);
      const double im = Zr.at(r + d, c) - Zr.at(r, c + d);
      out.set(r, c, cplx(re, im) * (s[r] * s[c] * inv));
    }
  }
  return out;
}

// Improving-ray test on the ORIGINAL data: Z PSD, <G_i, Z> ~ 0, <G0, Z> < 0
// proves there is no feasible point. Returns true and fills the report only
// when the unscaled certificate itself is tight.
bool Hsd::certify_infeasible(SolveReport& rep) const {
  std::vector<HermitianMatrix> zs;
  zs.reserve(B_.size());
  for (size_t b = 0; b < B_.size(); ++b) zs.push_back(complexify(b, W_[b].Z, 1.0));
  double hz = 0.0;
  for (size_t b = 0; b < B_.size(); ++b) hz += herm_dot(prob_.blocks()[b].constant, zs[b]);
  if (!(hz < 0.0)) return false;
  for (auto& z : zs) z.scale(1.0 / -hz);

  const auto& blocks = prob_.blocks();
  std::vector<double> st(n_, 0.0), coefnorm(n_, 0.0);
  for (size_t b = 0; b < blocks.size(); ++b) {
    std::vector<double> f2(n_, 0.0);
    for (const auto& e : blocks[b].entries) {
      const cplx zv = zs[b](e.c, e.r);
      st[e.param] += e.r == e.c ? e.coeff.real() * zv.real() : 2.0 * (e.coeff * zv).real();
      f2[e.param] += std::norm(e.coeff) * (e.r == e.c ? 1.0 : 2.0);
    }
    const double zn = zs[b].frob_norm();
    for (int j = 0; j < n_; ++j) coefnorm[j] += std::sqrt(f2[j]) * zn;
  }
  double worst = 0.0;
  for (int j = 0; j < n_; ++j) worst = std::max(worst, std::abs(st[j]) / (1.0 + coefnorm[j]));
  if (worst > 1e-6) return false;

  rep.status = SolveStatus::infeasible;
  rep.block_duals = std::move(zs);
  rep.message = "primal infeasible: improving ray certified";
  return true;
}

void Hsd::fill_optimal(SolveReport& rep, const Metrics& mt) const {
  rep.status = SolveStatus::optimal;
  rep.primal_residual = mt.pres;
  rep.dual_residual = mt.dres;
  rep.u.resize(n_);
  for (int j = 0; j < n_; ++j) rep.u[j] = sc_.var[j] * u_[j] / tau_;
  rep.block_duals.clear();
  rep.block_duals.reserve(B_.size());
  for (size_t b = 0; b < B_.size(); ++b) rep.block_duals.push_back(complexify(b, W_[b].Z, tau_));
  const auto& obj = prob_.objective();
  double pobj = 0.0;
  for (int j = 0; j < n_; ++j) pobj += obj[j] * rep.u[j];
  double dobj = 0.0;
  for (size_t b = 0; b < B_.size(); ++b)
    dobj -= herm_dot(prob_.blocks()[b].constant, rep.block_duals[b]);
  rep.primal_objective = pobj;
  rep.dual_objective = dobj;
  rep.rel_gap = std::abs(pobj - dobj) / std::max({1.0, std::abs(pobj), std::abs(dobj)});
}

SolveReport Hsd::run() {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  Snapshot best;
  double best_score = std::numeric_limits<double>::infinity();
  std::string fail_msg = "iteration cap reached";
  int steps = 0;

  for (int iter = 0; iter <= st_.max_iter; ++iter) {
    Metrics mt = metrics();
    rep.trace.push_back({mt.pobj, mt.dobj, mt.gap_term, mt.resid_corr, mt.pres, mt.dres});

    if (mt.pres <= st_.feas_tol && mt.dres <= st_.feas_tol && mt.relgap <= st_.gap_tol) {
      fill_optimal(rep, mt);
      rep.message = "converged";
      rep.iterations = steps;
      rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return rep;
    }
    const double score = std::max({mt.pres, mt.dres, mt.relgap});
    if (score < best_score) {
      best_score = score;
      save_snapshot(best);
    } else if (score > 1e6 * best_score) {
      fail_msg = "iterates diverged";
      break;
    }
    // Ray detection: the scaled certificate must be strong before paying for
    // the original-space verification.
    if (mt.hz < 0.0) {
      double rdn = 0.0;
      std::vector<double> az(n_, 0.0);
      for (size_t b = 0; b < B_.size(); ++b) accum_adjoint(B_[b], W_[b].Z, az);
      for (int j = 0; j < n_; ++j) rdn += az[j] * az[j];
      if (std::sqrt(rdn) / ((-mt.hz) * (1.0 + gnorm_)) <= st_.inf_tol && certify_infeasible(rep)) {
        rep.iterations = steps;
        rep.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return rep;
      }
    }
    if (iter == st_.max_iter) break;

    if (!nt_scale_all()) {
      fail_msg = "iterate left the cone interior";
      break;
    }
    if (!build_schur()) {
      fail_msg = "schur complement factorization failed";
      break;
    }
    prepare_common();
    if (!(den_ > 0.0) || !std::isfinite(den_)) {
      fail_msg = "self-dual elimination lost positivity";
      break;
    }

    // Predictor: aim at zero residual and zero complementarity.
    std::fill(xvec_.begin(), xvec_.end(), 0.0);
    double s0 = 0.0;
    for (size_t b = 0; b < B_.size(); ++b) {
      BlockWork& wk = W_[b];
      for (size_t i = 0; i < wk.t1.a.size(); ++i) wk.t1.a[i] = -(wk.S.a[i] + wk.Rp.a[i]);
      mul(wk.Winv, wk.t1, wk.t2);
      mul(wk.t2, wk.Winv, wk.X);
      symmetrize(wk.X);
      accum_adjoint(B_[b], wk.X, xvec_);
      s0 += ddot(B_[b].g0, wk.X);
    }
    Step aff = solve_newton(s0, -tau_ * kappa_);
    for (auto& wk : W_) {
      wk.dSaff = wk.dS;
      wk.dZaff = wk.dZ;
    }
    const double a_aff = boundary_all(true, aff.dtau, aff.dkappa);
    const double mu_aff = mu_after(a_aff, true, aff.dtau, aff.dkappa);
    double sigma = mu_aff / mt.mu;
    sigma = std::clamp(sigma * sigma * sigma, 0.0, 1.0);

    // Corrector: recentre and subtract the second-order cross term.
    std::fill(xvec_.begin(), xvec_.end(), 0.0);
    s0 = 0.0;
    const double smu = sigma * mt.mu;
    for (size_t b = 0; b < B_.size(); ++b) {
      BlockWork& wk = W_[b];
      const int m = B_[b].rdim;
      mul(wk.Rinv, wk.dSaff, wk.t1);
      mul_nt(wk.t1, wk.Rinv, wk.t2);  // scaled affine dS
      mul_tn(wk.R, wk.dZaff, wk.t1);
      mul(wk.t1, wk.R, wk.t3);  // scaled affine dZ
      mul(wk.t2, wk.t3, wk.t1);  // cross product, symmetrized below
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
          double tv = -0.5 * (wk.t1.at(r, c) + wk.t1.at(c, r));
          if (r == c) tv += smu - wk.lam[r] * wk.lam[r];
          wk.t2.at(r, c) = 2.0 * tv / (wk.lam[r] + wk.lam[c]);
        }
      mul(wk.R, wk.t2, wk.t1);
      mul_nt(wk.t1, wk.R, wk.t3);  // R Dtilde R^T
      for (size_t i = 0; i < wk.t3.a.size(); ++i) wk.t3.a[i] -= wk.Rp.a[i];
      mul(wk.Winv, wk.t3, wk.t1);
      mul(wk.t1, wk.Winv, wk.X);
      symmetrize(wk.X);
      accum_adjoint(B_[b], wk.X, xvec_);
      s0 += ddot(B_[b].g0, wk.X);
    }
    Step cmb = solve_newton(s0, smu - tau_ * kappa_ - aff.dtau * aff.dkappa);

    const double a_max = boundary_all(false, cmb.dtau, cmb.dkappa);
    double alpha = std::min(1.0, 0.99 * a_max);
    int halvings = 0;
    while (alpha > 1e-12) {
      bool interior = tau_ + alpha * cmb.dtau > 0.0 && kappa_ + alpha * cmb.dkappa > 0.0;
      for (size_t b = 0; interior && b < B_.size(); ++b) {
        const BlockWork& wk = W_[b];
        scratch_.resize(wk.S.a.size());
        for (size_t i = 0; i < wk.S.a.size(); ++i) scratch_[i] = wk.S.a[i] + alpha * wk.dS.a[i];
        interior = cholesky_in_place(wk.S.n, scratch_.data());
        if (!interior) break;
        for (size_t i = 0; i < wk.Z.a.size(); ++i) scratch_[i] = wk.Z.a[i] + alpha * wk.dZ.a[i];
        interior = cholesky_in_place(wk.Z.n, scratch_.data());
      }
      if (interior) break;
      alpha *= 0.5;
      if (++halvings > 40) {
        alpha = 0.0;
        break;
      }
    }
    if (alpha <= 1e-12) {
      fail_msg = "step size collapsed";
      break;
    }
    // A sound step never inflates the complementarity measure; inflation means
    // the elimination produced a garbage direction, so back off or stop.
    bool degraded = false;
    while (mu_after(alpha, false, cmb.dtau, cmb.dkappa) > 1.2 * mt.mu) {
      alpha *= 0.5;
      if (alpha < 1e-8) {
        degraded = true;
        break;
      }
    }
    if (degraded) {
      fail_msg = "newton direction degraded";
      break;
    }

    for (int j = 0; j < n_; ++j) u_[j] += alpha * cmb.du[j];
    tau_ += alpha * cmb.dtau;
    kappa_ += alpha * cmb.dkappa;
    for (auto& wk : W_) {
      for (size_t i = 0; i < wk.S.a.size(); ++i) wk.S.a[i] += alpha * wk.dS.a[i];
      for (size_t i = 0; i < wk.Z.a.size(); ++i) wk.Z.a[i] += alpha * wk.dZ.a[i];
      symmetrize(wk.S);
      symmetrize(wk.Z);
    }
    ++steps;
  }

  // Fall back to the best iterate; accept it if it clears the looser gate.
  if (best.set) restore_snapshot(best);
  Metrics mt = metrics();
  rep.iterations = steps;
  if (mt.pres <= st_.accept_feas && mt.dres <= st_.accept_feas && mt.relgap <= st_.accept_gap) {
    fill_optimal(rep, mt);
    rep.message = "accepted best iterate (" + fail_msg + ")";
  } else {
    fill_optimal(rep, mt);  // best-effort values for diagnostics
    rep.status = SolveStatus::numerical_failure;
    rep.message = fail_msg;
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace

SolveReport solve(const ConicProblem& p, const SolverSettings& settings) {
  if (p.num_params() == 0 || p.blocks().empty())
    throw std::invalid_argument("solve: problem has no parameters or no blocks");
  Scaling sc = equilibrate(p);
  SolveReport rep = Hsd(p, settings, sc).run();
  // The gap criterion is absolute once the scaled objective falls well below
  // one, so a tiny optimum carries no relative precision. Rescale the
  // objective to put the optimum near one and solve again. The same rescale is
  // worth one retry after a numerical failure whose objective estimate is tiny.
  for (int round = 0; round < 2; ++round) {
    if (rep.status == SolveStatus::infeasible) break;
    const bool failed = rep.status == SolveStatus::numerical_failure;
    const double scaled = std::abs(rep.primal_objective) * sc.obj;
    if (!(scaled > 1e-300) || scaled > 1e-2) break;
    sc.obj /= scaled;
    SolveReport boosted = Hsd(p, settings, sc).run();
    if (boosted.status == SolveStatus::numerical_failure && failed) break;
    if (boosted.status != SolveStatus::optimal && !failed) break;
    boosted.trace.insert(boosted.trace.begin(), rep.trace.begin(), rep.trace.end());
    boosted.iterations += rep.iterations;
    boosted.wall_ms += rep.wall_ms;
    rep = std::move(boosted);
  }
  return rep;
}

KktResiduals kkt_residuals(const ConicProblem& p, const SolveReport& rep) {
  const int n = p.num_params();
  if (static_cast<int>(rep.u.size()) != n || rep.block_duals.size() != p.blocks().size())
    throw std::invalid_argument("kkt_residuals: report does not match problem");
  KktResiduals out;
  const auto& blocks = p.blocks();

  std::vector<double> st(n, 0.0), coefnorm(n, 0.0);
  for (size_t b = 0; b < blocks.size(); ++b) {
    const auto& z = rep.block_duals[b];
    std::vector<double> f2(n, 0.0);
    for (const auto& e : blocks[b].entries) {
      const cplx zv = z(e.c, e.r);
      st[e.param] += e.r == e.c ? e.coeff.real() * zv.real() : 2.0 * (e.coeff * zv).real();
      f2[e.param] += std::norm(e.coeff) * (e.r == e.c ? 1.0 : 2.0);
    }
    const double zn = z.frob_norm();
    for (int j = 0; j < n; ++j) coefnorm[j] += std::sqrt(f2[j]) * zn;
  }
  const auto& obj = p.objective();
  for (int j = 0; j < n; ++j) {
    const double r = std::abs(obj[j] - st[j]) / (1.0 + std::abs(obj[j]) + coefnorm[j]);
    out.stationarity = std::max(out.stationarity, r);
  }

  for (size_t b = 0; b < blocks.size(); ++b) {
    const HermitianMatrix s = ConicProblem::eval_block(blocks[b], rep.u);
    const HermitianMatrix& z = rep.block_duals[b];
    const ComplexMatrix prod = s.to_matrix() * z.to_matrix();
    const double cs = prod.frob_norm() / ((1.0 + s.frob_norm()) * (1.0 + z.frob_norm()));
    out.complementarity = std::max(out.complementarity, cs);
    const auto se = hermitian_eig(s);
    const auto ze = hermitian_eig(z);
    out.primal_violation =
        std::max(out.primal_violation, std::max(0.0, -se.values.front()) / (1.0 + s.frob_norm()));
    out.dual_violation =
        std::max(out.dual_violation, std::max(0.0, -ze.values.front()) / (1.0 + z.frob_norm()));
  }
  return out;
}

}  // namespace fdcr
