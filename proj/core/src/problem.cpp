#include "fdcr/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace fdcr {

// ---- ConicProblem -----------------------------------------------------------

int ConicProblem::add_scalar(const std::string& name) {
  names_.push_back(name);
  obj_.push_back(0.0);
  return num_params() - 1;
}

MatrixVar ConicProblem::add_hermitian_var(const std::string& name, int dim) {
  MatrixVar w;
  w.name = name;
  w.dim = dim;
  w.first_param = num_params();
  for (int i = 0; i < dim; ++i)
    add_scalar(name + ".d" + std::to_string(i));
  for (int p = 0; p < dim; ++p) {
    for (int q = p + 1; q < dim; ++q) {
      const std::string sub = std::to_string(p) + "," + std::to_string(q);
      add_scalar(name + ".re(" + sub + ")");
      add_scalar(name + ".im(" + sub + ")");
    }
  }
  // the PSD cone block that makes the parameter bundle a matrix variable
  const int b = new_block(name + "_psd", dim);
  for (int i = 0; i < dim; ++i) add_coeff(b, i, i, w.diag_param(i), 1.0);
  for (int p = 0; p < dim; ++p) {
    for (int q = p + 1; q < dim; ++q) {
      add_coeff(b, p, q, w.re_param(p, q), cplx(1.0, 0.0));
      add_coeff(b, p, q, w.im_param(p, q), cplx(0.0, 1.0));
    }
  }
  return w;
}

void ConicProblem::add_objective(int param, double coeff) { obj_.at(param) += coeff; }

int ConicProblem::new_block(const std::string& name, int dim) {
  Block blk;
  blk.name = name;
  blk.dim = dim;
  blk.constant = HermitianMatrix(dim);
  blocks_.push_back(std::move(blk));
  return static_cast<int>(blocks_.size()) - 1;
}

void ConicProblem::add_const(int block, int r, int c, cplx v) {
  blocks_.at(block).constant.add(r, c, v);
}

void ConicProblem::add_coeff(int block, int r, int c, int param, cplx v) {
  if (param < 0 || param >= num_params()) throw std::invalid_argument("add_coeff: unknown parameter");
  if (v == cplx(0.0, 0.0)) return;
  if (r > c) {
    std::swap(r, c);
    v = std::conj(v);
  }
  if (r == c) {
    if (std::abs(v.imag()) > 1e-14 * std::abs(v.real()) + 1e-300)
      throw std::invalid_argument("add_coeff: diagonal coefficient must be real");
    v = cplx(v.real(), 0.0);
  }
  blocks_.at(block).entries.push_back({param, r, c, v});
}

void ConicProblem::add_trace_coeff(int block, int r, int c, const MatrixVar& w,
                                   const HermitianMatrix& a, double sign) {
  if (a.dim() != w.dim) throw std::invalid_argument("add_trace_coeff: dimension mismatch");
  for (int i = 0; i < w.dim; ++i) {
    const double v = sign * a(i, i).real();
    if (v != 0.0) add_coeff(block, r, c, w.diag_param(i), v);
  }
  for (int p = 0; p < w.dim; ++p) {
    for (int q = p + 1; q < w.dim; ++q) {
      // Tr(a W) pairs (p,q),(q,p): 2 Re(a_pq) re_pq + 2 Im(a_pq) im_pq
      const double re = sign * 2.0 * a(p, q).real();
      const double im = sign * 2.0 * a(p, q).imag();
      if (re != 0.0) add_coeff(block, r, c, w.re_param(p, q), re);
      if (im != 0.0) add_coeff(block, r, c, w.im_param(p, q), im);
    }
  }
}

void ConicProblem::add_outer_coeff(int block, int param, const CVec& vec, double sign) {
  const int m = static_cast<int>(vec.size());
  if (blocks_.at(block).dim != m) throw std::invalid_argument("add_outer_coeff: dimension mismatch");
  for (int r = 0; r < m; ++r) {
    add_coeff(block, r, r, param, sign * std::norm(vec[r]));
    for (int c = r + 1; c < m; ++c) add_coeff(block, r, c, param, sign * vec[r] * std::conj(vec[c]));
  }
}

void ConicProblem::add_congruence(int block, const MatrixVar& w, const ComplexMatrix& b,
                                  double sign) {
  const int n = w.dim;
  const int m = blocks_.at(block).dim;
  if (b.rows() != n || b.cols() != m) throw std::invalid_argument("add_congruence: B shape mismatch");
  const cplx iu(0.0, 1.0);
  for (int r = 0; r < m; ++r) {
    for (int c = r; c < m; ++c) {
      for (int i = 0; i < n; ++i) {
        const cplx v = sign * std::conj(b(i, r)) * b(i, c);
        if (v != cplx(0.0, 0.0)) add_coeff(block, r, c, w.diag_param(i), v);
      }
      for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const cplx t1 = std::conj(b(p, r)) * b(q, c);
          const cplx t2 = std::conj(b(q, r)) * b(p, c);
          const cplx vre = sign * (t1 + t2);
          const cplx vim = sign * iu * (t1 - t2);
          if (vre != cplx(0.0, 0.0)) add_coeff(block, r, c, w.re_param(p, q), vre);
          if (vim != cplx(0.0, 0.0)) add_coeff(block, r, c, w.im_param(p, q), vim);
        }
      }
    }
  }
}

HermitianMatrix ConicProblem::eval_block(const Block& blk, const std::vector<double>& u) {
  HermitianMatrix s = blk.constant;
  for (const Entry& e : blk.entries) s.add(e.r, e.c, u.at(e.param) * e.coeff);
  return s;
}

HermitianMatrix ConicProblem::extract_hermitian(const MatrixVar& w,
                                                const std::vector<double>& u) const {
  HermitianMatrix h(w.dim);
  for (int i = 0; i < w.dim; ++i) h.set(i, i, u.at(w.diag_param(i)));
  for (int p = 0; p < w.dim; ++p)
    for (int q = p + 1; q < w.dim; ++q)
      h.set(p, q, cplx(u.at(w.re_param(p, q)), u.at(w.im_param(p, q))));
  return h;
}

// ---- instance ----------------------------------------------------------------

PrimaryCsi primary_csi_view(const ChannelRealization& ch) {
  PrimaryCsi csi;
  csi.l_hat = ch.l_hat;
  csi.e_hat = ch.e_hat;
  csi.eps_dl = ch.eps_dl;
  const int j_users = static_cast<int>(ch.eps_ul.size());
  const int r_count = j_users > 0 ? static_cast<int>(ch.eps_ul[0].size()) : 0;
  csi.eps_ul_stacked.assign(r_count, 0.0);
  for (int r = 0; r < r_count; ++r) {
    double s = 0.0;
    for (int j = 0; j < j_users; ++j) s += ch.eps_ul[j][r] * ch.eps_ul[j][r];
    csi.eps_ul_stacked[r] = std::sqrt(s);
  }
  return csi;
}

RobustInstance make_instance(const SystemConfig& cfg, const ChannelRealization& ch,
                             ReceiverBank receivers) {
  RobustInstance inst;
  inst.cfg = cfg;
  inst.h = ch.h;
  inst.g = ch.g;
  inst.f = ch.f;
  inst.h_si = ch.h_si;
  inst.receivers = std::move(receivers);
  inst.primary = primary_csi_view(ch);
  return inst;
}

// ---- shared constraint emission ------------------------------------------------

namespace {

// a linear term that is either a live parameter or a frozen numeric value
struct Lin {
  int param = -1;
  double value = 0.0;
  static Lin var(int p) { return {p, 0.0}; }
  static Lin fixed(double v) { return {-1, v}; }
  bool is_var() const { return param >= 0; }
};

// DL transmit object: full covariance variable, or scalar power on a fixed direction
struct DlVar {
  bool is_matrix = true;
  MatrixVar w;
  int p = -1;
  CVec dir;
};

struct Ctx {
  const RobustInstance& inst;
  ConicProblem prob;
  std::vector<DlVar> dl;
  std::vector<Lin> p_ul;
  Lin tau;
  std::vector<Lin> delta, alpha, beta;

  explicit Ctx(const RobustInstance& i) : inst(i) {}

  void scalar_entry(int blk, int r, int c, const Lin& t, cplx coeff) {
    if (t.is_var())
      prob.add_coeff(blk, r, c, t.param, coeff);
    else if (t.value != 0.0)
      prob.add_const(blk, r, c, coeff * t.value);
  }
  void dl_trace(int blk, int r, int c, const DlVar& d, const HermitianMatrix& a, double sign) {
    if (d.is_matrix)
      prob.add_trace_coeff(blk, r, c, d.w, a, sign);
    else
      prob.add_coeff(blk, r, c, d.p, sign * a.quad_form(d.dir));
  }
  void dl_congruence(int blk, const DlVar& d, const ComplexMatrix& b, double sign) {
    if (d.is_matrix) {
      prob.add_congruence(blk, d.w, b, sign);
    } else {
      CVec bv(b.cols());
      for (int c = 0; c < b.cols(); ++c) {
        cplx s = 0.0;
        for (int i = 0; i < b.rows(); ++i) s += std::conj(b(i, c)) * d.dir[i];
        bv[c] = s;  // (B^H dir)_c
      }
      prob.add_outer_coeff(blk, d.p, bv, sign);
    }
  }
};

std::string idx_name(const char* base, int i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

// signal/Gamma - intra-cell interference - optional UL cross interference - noise >= 0
void emit_dl_sinr(Ctx& ctx, const std::vector<double>& targets, bool with_cci) {
  const SystemConfig& cfg = ctx.inst.cfg;
  for (int k = 0; k < cfg.K; ++k) {
    const int blk = ctx.prob.new_block(idx_name("dl_sinr", k), 1);
    const HermitianMatrix hk = HermitianMatrix::outer(ctx.inst.h[k]);
    const int n_dl = static_cast<int>(ctx.dl.size());
    for (int m = 0; m < n_dl; ++m)
      ctx.dl_trace(blk, 0, 0, ctx.dl[m], hk, m == k ? 1.0 / targets[k] : -1.0);
    if (with_cci)
      for (int j = 0; j < cfg.J; ++j)
        ctx.scalar_entry(blk, 0, 0, ctx.p_ul[j], -std::norm(ctx.inst.f(j, k)));
    ctx.prob.add_const(blk, 0, 0, -cfg.sigma2_dl_w[k]);
  }
}

// own power/Gamma - cross powers - optional residual SI - noise >= 0
void emit_ul_sinr(Ctx& ctx, const std::vector<double>& targets, bool with_si,
                  const ReceiverBank& bank) {
  const SystemConfig& cfg = ctx.inst.cfg;
  for (int j = 0; j < cfg.J; ++j) {
    const int blk = ctx.prob.new_block(idx_name("ul_sinr", j), 1);
    const CVec& vj = bank.v[j];
    for (int n = 0; n < cfg.J; ++n) {
      const double gain = std::norm(vdot(ctx.inst.g[n], vj));
      ctx.scalar_entry(blk, 0, 0, ctx.p_ul[n], n == j ? gain / targets[j] : -gain);
    }
    if (with_si) {
      // rho * H^H diag(|v_i|^2) H, assembled entrywise to stay exactly Hermitian
      const int n_t = cfg.N_T;
      HermitianMatrix a(n_t);
      for (int p = 0; p < n_t; ++p) {
        for (int q = p; q < n_t; ++q) {
          cplx s = 0.0;
          for (int i = 0; i < n_t; ++i)
            s += std::conj(ctx.inst.h_si(i, p)) * std::norm(vj[i]) * ctx.inst.h_si(i, q);
          a.set(p, q, cfg.rho * s);
        }
      }
      for (DlVar& d : ctx.dl) ctx.dl_trace(blk, 0, 0, d, a, -1.0);
    }
    ctx.prob.add_const(blk, 0, 0, -cfg.sigma2_ul_w * vnorm2(vj));
  }
}

void emit_dl_budget(Ctx& ctx) {
  const int blk = ctx.prob.new_block("dl_power_budget", 1);
  ctx.prob.add_const(blk, 0, 0, ctx.inst.cfg.P_DL_max_w);
  const HermitianMatrix eye = HermitianMatrix::identity(ctx.inst.cfg.N_T);
  for (DlVar& d : ctx.dl) ctx.dl_trace(blk, 0, 0, d, eye, -1.0);
}

void emit_ul_power_bounds(Ctx& ctx) {
  const SystemConfig& cfg = ctx.inst.cfg;
  for (int j = 0; j < cfg.J; ++j) {
    if (!ctx.p_ul[j].is_var()) continue;
    int blk = ctx.prob.new_block(idx_name("ul_power_nonneg", j), 1);
    ctx.prob.add_coeff(blk, 0, 0, ctx.p_ul[j].param, 1.0);
    blk = ctx.prob.new_block(idx_name("ul_power_cap", j), 1);
    ctx.prob.add_const(blk, 0, 0, cfg.P_UL_max_w[j]);
    ctx.prob.add_coeff(blk, 0, 0, ctx.p_ul[j].param, -1.0);
  }
}

// bound >= sup over the DL channel ball of sum_k l^H W_k l, via one multiplier
void emit_dl_leakage(Ctx& ctx, int r, const Lin& bound) {
  const SystemConfig& cfg = ctx.inst.cfg;
  const CVec& l_hat = ctx.inst.primary.l_hat[r];
  const double eps = ctx.inst.primary.eps_dl[r];
  if (eps == 0.0) {
    const int blk = ctx.prob.new_block(idx_name("dl_leakage_nominal", r), 1);
    ctx.scalar_entry(blk, 0, 0, bound, 1.0);
    const HermitianMatrix ll = HermitianMatrix::outer(l_hat);
    for (DlVar& d : ctx.dl) ctx.dl_trace(blk, 0, 0, d, ll, -1.0);
    return;
  }
  // Bordered form scaled by the congruence D = diag(eps..eps, 1): the
  // multiplier absorbs the eps^2 ball factor, so every entry of the block
  // lives at leakage magnitude and solver feasibility noise stays there too.
  const int n = cfg.N_T;
  const int blk = ctx.prob.new_block(idx_name("dl_leakage_robust", r), n + 1);
  for (int i = 0; i < n; ++i) ctx.scalar_entry(blk, i, i, ctx.alpha[r], 1.0);
  ctx.scalar_entry(blk, n, n, ctx.alpha[r], -1.0);
  ctx.scalar_entry(blk, n, n, bound, 1.0);
  ComplexMatrix b(n, n + 1);
  for (int i = 0; i < n; ++i) {
    b(i, i) = eps;
    b(i, n) = l_hat[i];
  }
  for (DlVar& d : ctx.dl) ctx.dl_congruence(blk, d, b, -1.0);
}

// tau - delta >= sup over the stacked UL error ball of sum_j P_j |e_j|^2
void emit_ul_leakage(Ctx& ctx, int r, const Lin& tau, const Lin& delta) {
  const SystemConfig& cfg = ctx.inst.cfg;
  const double eps = ctx.inst.primary.eps_ul_stacked[r];
  CVec e_hat(cfg.J);
  for (int j = 0; j < cfg.J; ++j) e_hat[j] = ctx.inst.primary.e_hat(j, r);

  if (eps == 0.0) {
    const int blk = ctx.prob.new_block(idx_name("ul_leakage_nominal", r), 1);
    ctx.scalar_entry(blk, 0, 0, tau, 1.0);
    ctx.scalar_entry(blk, 0, 0, delta, -1.0);
    for (int j = 0; j < cfg.J; ++j)
      ctx.scalar_entry(blk, 0, 0, ctx.p_ul[j], -std::norm(e_hat[j]));
    return;
  }
  // Same congruence scaling as the DL block: beta absorbs the eps^2 factor.
  const int blk = ctx.prob.new_block(idx_name("ul_leakage_robust", r), cfg.J + 1);
  for (int j = 0; j < cfg.J; ++j) {
    ctx.scalar_entry(blk, j, j, ctx.beta[r], 1.0);
    ctx.scalar_entry(blk, j, j, ctx.p_ul[j], -eps * eps);
    ctx.scalar_entry(blk, j, cfg.J, ctx.p_ul[j], -eps * e_hat[j]);
    ctx.scalar_entry(blk, cfg.J, cfg.J, ctx.p_ul[j], -std::norm(e_hat[j]));
  }
  ctx.scalar_entry(blk, cfg.J, cfg.J, ctx.beta[r], -1.0);
  ctx.scalar_entry(blk, cfg.J, cfg.J, tau, 1.0);
  ctx.scalar_entry(blk, cfg.J, cfg.J, delta, -1.0);
}

void emit_nonneg(Ctx& ctx, const Lin& t, const std::string& name) {
  if (!t.is_var()) return;
  const int blk = ctx.prob.new_block(name, 1);
  ctx.prob.add_coeff(blk, 0, 0, t.param, 1.0);
}

ProblemHandles collect_handles(const Ctx& ctx) {
  ProblemHandles h;
  for (const DlVar& d : ctx.dl) {
    if (d.is_matrix) {
      h.w.push_back(d.w);
    } else {
      h.p_dl.push_back(d.p);
    }
  }
  auto lin_params = [](const std::vector<Lin>& v) {
    std::vector<int> out;
    out.reserve(v.size());
    for (const Lin& t : v) out.push_back(t.param);
    return out;
  };
  h.p_ul = lin_params(ctx.p_ul);
  h.tau = ctx.tau.param;
  h.delta = lin_params(ctx.delta);
  h.alpha = lin_params(ctx.alpha);
  h.beta = lin_params(ctx.beta);
  return h;
}

std::vector<CVec> dl_dirs_of(const Ctx& ctx) {
  std::vector<CVec> dirs;
  for (const DlVar& d : ctx.dl)
    if (!d.is_matrix) dirs.push_back(d.dir);
  return dirs;
}

}  // namespace

FrozenScalars extract_scalars(const BuiltProblem& built, const std::vector<double>& u) {
  FrozenScalars fs;
  const ProblemHandles& h = built.handles;
  for (int p : h.p_ul) fs.p_ul.push_back(p >= 0 ? u.at(p) : 0.0);
  fs.tau = h.tau >= 0 ? u.at(h.tau) : 0.0;
  auto vals = [&](const std::vector<int>& ids) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (int p : ids) out.push_back(p >= 0 ? u.at(p) : 0.0);
    return out;
  };
  fs.delta = vals(h.delta);
  fs.alpha = vals(h.alpha);
  fs.beta = vals(h.beta);
  return fs;
}

namespace {

// Shared emission for the joint allocation programs: min tau plus an optional
// total-DL-power tie-break weighted by trace_weight (0 = pure relaxation).
BuiltProblem build_joint(const RobustInstance& inst, double trace_weight) {
  const SystemConfig& cfg = inst.cfg;
  Ctx ctx(inst);

  for (int k = 0; k < cfg.K; ++k) {
    DlVar d;
    d.is_matrix = true;
    d.w = ctx.prob.add_hermitian_var(idx_name("W", k), cfg.N_T);
    ctx.dl.push_back(std::move(d));
  }
  for (int j = 0; j < cfg.J; ++j)
    ctx.p_ul.push_back(Lin::var(ctx.prob.add_scalar(idx_name("p_ul", j))));
  ctx.tau = Lin::var(ctx.prob.add_scalar("tau"));
  for (int r = 0; r < cfg.R; ++r) {
    ctx.delta.push_back(Lin::var(ctx.prob.add_scalar(idx_name("delta", r))));
    ctx.alpha.push_back(inst.primary.eps_dl[r] > 0.0
                            ? Lin::var(ctx.prob.add_scalar(idx_name("alpha", r)))
                            : Lin::fixed(0.0));
    ctx.beta.push_back(inst.primary.eps_ul_stacked[r] > 0.0
                           ? Lin::var(ctx.prob.add_scalar(idx_name("beta", r)))
                           : Lin::fixed(0.0));
  }
  ctx.prob.add_objective(ctx.tau.param, 1.0);
  if (trace_weight > 0.0) {
    for (const DlVar& d : ctx.dl)
      for (int i = 0; i < d.w.dim; ++i) ctx.prob.add_objective(d.w.diag_param(i), trace_weight);
  }

  emit_dl_sinr(ctx, cfg.gamma_dl_req, true);
  emit_ul_sinr(ctx, cfg.gamma_ul_req, true, inst.receivers);
  emit_dl_budget(ctx);
  emit_ul_power_bounds(ctx);
  for (int r = 0; r < cfg.R; ++r) emit_dl_leakage(ctx, r, ctx.delta[r]);
  for (int r = 0; r < cfg.R; ++r) emit_ul_leakage(ctx, r, ctx.tau, ctx.delta[r]);
  for (int r = 0; r < cfg.R; ++r) {
    emit_nonneg(ctx, ctx.delta[r], idx_name("delta_nonneg", r));
    emit_nonneg(ctx, ctx.alpha[r], idx_name("alpha_nonneg", r));
    emit_nonneg(ctx, ctx.beta[r], idx_name("beta_nonneg", r));
  }

  BuiltProblem out{std::move(ctx.prob), collect_handles(ctx)};
  return out;
}

}  // namespace

BuiltProblem build_relaxed(const RobustInstance& inst) { return build_joint(inst, 0.0); }

BuiltProblem build_auxiliary(const RobustInstance& inst, double trace_weight) {
  if (!(trace_weight > 0.0))
    throw std::invalid_argument("build_auxiliary: trace weight must be positive");
  return build_joint(inst, trace_weight);
}

std::vector<CVec> zf_dl_directions(const std::vector<CVec>& h) {
  const int k_users = static_cast<int>(h.size());
  if (k_users == 0) throw std::invalid_argument("zf_dl_directions: no channels");
  const int n = static_cast<int>(h[0].size());
  std::vector<CVec> dirs(k_users);
  for (int k = 0; k < k_users; ++k) {
    CVec w = h[k];
    if (k_users > 1) {
      std::vector<CVec> others;
      for (int m = 0; m < k_users; ++m)
        if (m != k) others.push_back(h[m]);
      const ComplexMatrix ht = ComplexMatrix::from_columns(others);
      const HermitianMatrix gram = HermitianMatrix::from_matrix(ht.adjoint() * ht, 1e-8);
      const EigResult eig = hermitian_eig(gram);
      if (!(eig.values.front() > 0.0) || std::sqrt(eig.values.back() / eig.values.front()) > 1e12)
        throw SingularChannelError("zf_dl_directions: dependent DL channels");
      const CVec coef = solve_hpd(gram, ht.adjoint() * h[k]);
      const CVec proj = ht * coef;
      for (int i = 0; i < n; ++i) w[i] -= proj[i];
    }
    const double nw = vnorm(w);
    if (nw <= 1e-8 * vnorm(h[k]))
      throw SingularChannelError("zf_dl_directions: channel lies in the span of the others");
    for (cplx& x : w) x /= nw;
    dirs[k] = std::move(w);
  }
  return dirs;
}

BuiltProblem build_fixed_directions(const RobustInstance& inst, const std::vector<CVec>& dirs) {
  const SystemConfig& cfg = inst.cfg;
  Ctx ctx(inst);

  if (static_cast<int>(dirs.size()) != cfg.K)
    throw std::invalid_argument("build_fixed_directions: need one direction per DL user");
  for (int k = 0; k < cfg.K; ++k) {
    if (static_cast<int>(dirs[k].size()) != cfg.N_T)
      throw std::invalid_argument("build_fixed_directions: direction length != N_T");
    const double nd = vnorm(dirs[k]);
    if (!(nd > 0.0)) throw std::invalid_argument("build_fixed_directions: zero direction");
    DlVar d;
    d.is_matrix = false;
    d.p = ctx.prob.add_scalar(idx_name("p_dl", k));
    d.dir = dirs[k];
    for (cplx& x : d.dir) x /= nd;
    ctx.dl.push_back(std::move(d));
  }
  for (int j = 0; j < cfg.J; ++j)
    ctx.p_ul.push_back(Lin::var(ctx.prob.add_scalar(idx_name("p_ul", j))));
  ctx.tau = Lin::var(ctx.prob.add_scalar("tau"));
  for (int r = 0; r < cfg.R; ++r) {
    ctx.delta.push_back(Lin::var(ctx.prob.add_scalar(idx_name("delta", r))));
    ctx.alpha.push_back(inst.primary.eps_dl[r] > 0.0
                            ? Lin::var(ctx.prob.add_scalar(idx_name("alpha", r)))
                            : Lin::fixed(0.0));
    ctx.beta.push_back(inst.primary.eps_ul_stacked[r] > 0.0
                           ? Lin::var(ctx.prob.add_scalar(idx_name("beta", r)))
                           : Lin::fixed(0.0));
  }
  ctx.prob.add_objective(ctx.tau.param, 1.0);

  for (int k = 0; k < cfg.K; ++k) {
    const int blk = ctx.prob.new_block(idx_name("dl_power_nonneg", k), 1);
    ctx.prob.add_coeff(blk, 0, 0, ctx.dl[k].p, 1.0);
  }
  emit_dl_sinr(ctx, cfg.gamma_dl_req, true);
  emit_ul_sinr(ctx, cfg.gamma_ul_req, true, inst.receivers);
  emit_dl_budget(ctx);
  emit_ul_power_bounds(ctx);
  for (int r = 0; r < cfg.R; ++r) emit_dl_leakage(ctx, r, ctx.delta[r]);
  for (int r = 0; r < cfg.R; ++r) emit_ul_leakage(ctx, r, ctx.tau, ctx.delta[r]);
  for (int r = 0; r < cfg.R; ++r) {
    emit_nonneg(ctx, ctx.delta[r], idx_name("delta_nonneg", r));
    emit_nonneg(ctx, ctx.alpha[r], idx_name("alpha_nonneg", r));
    emit_nonneg(ctx, ctx.beta[r], idx_name("beta_nonneg", r));
  }

  BuiltProblem out{std::move(ctx.prob), collect_handles(ctx)};
  out.handles.dl_dirs = dl_dirs_of(ctx);
  return out;
}

BuiltProblem build_baseline1(const RobustInstance& inst) {
  return build_fixed_directions(inst, zf_dl_directions(inst.h));
}

double hd_sinr_target(double gamma_linear) {
  if (!(gamma_linear > 0.0)) throw std::invalid_argument("hd_sinr_target: target must be positive");
  return (1.0 + gamma_linear) * (1.0 + gamma_linear) - 1.0;
}

BuiltProblem build_baseline2_dl(const RobustInstance& inst) {
  const SystemConfig& cfg = inst.cfg;
  Ctx ctx(inst);

  for (int k = 0; k < cfg.K; ++k) {
    DlVar d;
    d.is_matrix = true;
    d.w = ctx.prob.add_hermitian_var(idx_name("W", k), cfg.N_T);
    ctx.dl.push_back(std::move(d));
  }
  ctx.tau = Lin::var(ctx.prob.add_scalar("tau"));
  for (int r = 0; r < cfg.R; ++r) {
    ctx.delta.push_back(Lin::fixed(0.0));
    ctx.alpha.push_back(inst.primary.eps_dl[r] > 0.0
                            ? Lin::var(ctx.prob.add_scalar(idx_name("alpha", r)))
                            : Lin::fixed(0.0));
    ctx.beta.push_back(Lin::fixed(0.0));
  }
  ctx.prob.add_objective(ctx.tau.param, 1.0);

  std::vector<double> targets(cfg.K);
  for (int k = 0; k < cfg.K; ++k) targets[k] = hd_sinr_target(cfg.gamma_dl_req[k]);
  emit_dl_sinr(ctx, targets, false);  // no simultaneous UL: no cross interference
  emit_dl_budget(ctx);
  for (int r = 0; r < cfg.R; ++r) emit_dl_leakage(ctx, r, ctx.tau);
  for (int r = 0; r < cfg.R; ++r) emit_nonneg(ctx, ctx.alpha[r], idx_name("alpha_nonneg", r));

  BuiltProblem out{std::move(ctx.prob), collect_handles(ctx)};
  return out;
}

BuiltProblem build_baseline2_ul(const RobustInstance& inst, const ReceiverBank& receivers) {
  const SystemConfig& cfg = inst.cfg;
  Ctx ctx(inst);

  for (int j = 0; j < cfg.J; ++j)
    ctx.p_ul.push_back(Lin::var(ctx.prob.add_scalar(idx_name("p_ul", j))));
  ctx.tau = Lin::var(ctx.prob.add_scalar("tau"));
  for (int r = 0; r < cfg.R; ++r) {
    ctx.delta.push_back(Lin::fixed(0.0));
    ctx.alpha.push_back(Lin::fixed(0.0));
    ctx.beta.push_back(inst.primary.eps_ul_stacked[r] > 0.0
                           ? Lin::var(ctx.prob.add_scalar(idx_name("beta", r)))
                           : Lin::fixed(0.0));
  }
  ctx.prob.add_objective(ctx.tau.param, 1.0);

  std::vector<double> targets(cfg.J);
  for (int j = 0; j < cfg.J; ++j) targets[j] = hd_sinr_target(cfg.gamma_ul_req[j]);
  emit_ul_sinr(ctx, targets, false, receivers);  // half-duplex: no self-interference
  emit_ul_power_bounds(ctx);
  for (int r = 0; r < cfg.R; ++r) emit_ul_leakage(ctx, r, ctx.tau, ctx.delta[r]);
  for (int r = 0; r < cfg.R; ++r) emit_nonneg(ctx, ctx.beta[r], idx_name("beta_nonneg", r));

  BuiltProblem out{std::move(ctx.prob), collect_handles(ctx)};
  return out;
}

}  // namespace fdcr
