#include "fdcr/problem.hpp"

#include <cmath>
#include <map>

#include "doctest.h"
#include "fdcr/rng.hpp"

using namespace fdcr;

namespace {

RobustInstance random_instance(const SystemConfig& cfg, std::uint64_t seed) {
  const Geometry geo = draw_geometry(cfg, seed, 0);
  const ChannelRealization ch = draw_realization(cfg, geo, seed, 0);
  return make_instance(cfg, ch, zf_receivers(ch.g));
}

void set_hermitian(std::vector<double>& u, const MatrixVar& w, const HermitianMatrix& h) {
  for (int i = 0; i < w.dim; ++i) u[w.diag_param(i)] = h(i, i).real();
  for (int p = 0; p < w.dim; ++p)
    for (int q = p + 1; q < w.dim; ++q) {
      u[w.re_param(p, q)] = h(p, q).real();
      u[w.im_param(p, q)] = h(p, q).imag();
    }
}

std::map<std::string, int> block_histogram(const ConicProblem& prob) {
  std::map<std::string, int> hist;
  for (const auto& blk : prob.blocks()) {
    std::string base = blk.name;
    const auto bracket = base.find('[');
    if (bracket != std::string::npos) base = base.substr(0, bracket) + "[]";
    ++hist[base + "/" + std::to_string(blk.dim)];
  }
  return hist;
}

bool problems_equal(const ConicProblem& a, const ConicProblem& b) {
  if (a.num_params() != b.num_params()) return false;
  if (a.objective() != b.objective()) return false;
  if (a.blocks().size() != b.blocks().size()) return false;
  for (size_t i = 0; i < a.blocks().size(); ++i) {
    const auto& x = a.blocks()[i];
    const auto& y = b.blocks()[i];
    if (x.name != y.name || x.dim != y.dim) return false;
    for (int r = 0; r < x.dim; ++r)
      for (int c = 0; c < x.dim; ++c)
        if (x.constant(r, c) != y.constant(r, c)) return false;
    if (x.entries.size() != y.entries.size()) return false;
    for (size_t e = 0; e < x.entries.size(); ++e) {
      if (x.entries[e].param != y.entries[e].param || x.entries[e].r != y.entries[e].r ||
          x.entries[e].c != y.entries[e].c || x.entries[e].coeff != y.entries[e].coeff)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("relaxed problem has the expected block census") {
  const SystemConfig cfg = make_default_config();
  const RobustInstance inst = random_instance(cfg, 1);
  const BuiltProblem built = build_relaxed(inst);

  const auto hist = block_histogram(built.prob);
  CHECK(hist.at("W[]/6") == 3);
  CHECK(hist.at("dl_sinr[]/1") == 3);
  CHECK(hist.at("ul_sinr[]/1") == 5);
  CHECK(hist.at("dl_power_budget/1") == 1);
  CHECK(hist.at("ul_power_nonneg[]/1") == 5);
  CHECK(hist.at("ul_power_cap[]/1") == 5);
  CHECK(hist.at("dl_leakage_robust[]/7") == 2);
  CHECK(hist.at("ul_leakage_robust[]/6") == 2);
  CHECK(hist.at("delta_nonneg[]/1") == 2);
  CHECK(hist.at("alpha_nonneg[]/1") == 2);
  CHECK(hist.at("beta_nonneg[]/1") == 2);
  CHECK(built.prob.blocks().size() == 32);
  CHECK(built.prob.num_params() == 3 * 36 + 5 + 1 + 2 + 2 + 2);

  CHECK(built.handles.w.size() == 3);
  CHECK(built.handles.p_ul.size() == 5);
  CHECK(built.handles.tau >= 0);
  for (int r = 0; r < 2; ++r) {
    CHECK(built.handles.delta[r] >= 0);
    CHECK(built.handles.alpha[r] >= 0);
    CHECK(built.handles.beta[r] >= 0);
  }

  // objective is exactly the epigraph variable
  int nonzero = 0;
  for (int i = 0; i < built.prob.num_params(); ++i)
    if (built.prob.objective()[i] != 0.0) ++nonzero;
  CHECK(nonzero == 1);
  CHECK(built.prob.objective()[built.handles.tau] == 1.0);
}

TEST_CASE("zero estimation radius degrades the LMIs to nominal scalars") {
  SystemConfig cfg = make_default_config();
  cfg.kappa2_est = 0.0;
  const RobustInstance inst = random_instance(cfg, 2);
  const BuiltProblem built = build_relaxed(inst);
  const auto hist = block_histogram(built.prob);
  CHECK(hist.at("dl_leakage_nominal[]/1") == 2);
  CHECK(hist.at("ul_leakage_nominal[]/1") == 2);
  CHECK(hist.count("dl_leakage_robust[]/7") == 0);
  CHECK(hist.count("alpha_nonneg[]/1") == 0);
  for (int r = 0; r < cfg.R; ++r) {
    CHECK(built.handles.alpha[r] == -1);
    CHECK(built.handles.beta[r] == -1);
  }
}

TEST_CASE("matrix variable round-trips through its parameter block") {
  ConicProblem prob;
  const MatrixVar w = prob.add_hermitian_var("X", 4);
  Rng rng(3);
  HermitianMatrix h(4);
  for (int i = 0; i < 4; ++i) {
    h.set(i, i, rng.normal());
    for (int j = i + 1; j < 4; ++j) h.set(i, j, rng.cnormal());
  }
  std::vector<double> u(prob.num_params(), 0.0);
  set_hermitian(u, w, h);
  const HermitianMatrix back = prob.extract_hermitian(w, u);
  const HermitianMatrix evaled = ConicProblem::eval_block(prob.blocks()[0], u);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      CHECK(back(r, c) == h(r, c));
      CHECK(std::abs(evaled(r, c) - h(r, c)) < 1e-15);
    }
}

TEST_CASE("constraint blocks evaluate to the direct formulas") {
  const SystemConfig cfg = make_default_config();
  const RobustInstance inst = random_instance(cfg, 4);
  const BuiltProblem built = build_relaxed(inst);
  const ConicProblem& prob = built.prob;

  // assemble a random point scaled roughly like a real allocation
  Rng rng(11);
  std::vector<double> u(prob.num_params(), 0.0);
  std::vector<HermitianMatrix> w_val;
  for (int k = 0; k < cfg.K; ++k) {
    ComplexMatrix b(cfg.N_T, cfg.N_T);
    for (int i = 0; i < cfg.N_T; ++i)
      for (int j = 0; j < cfg.N_T; ++j) b(i, j) = 0.1 * rng.cnormal();
    const HermitianMatrix wk = HermitianMatrix::from_matrix(b.adjoint() * b, 1e-9);
    w_val.push_back(wk);
    set_hermitian(u, built.handles.w[k], wk);
  }
  std::vector<double> p_val(cfg.J);
  for (int j = 0; j < cfg.J; ++j) p_val[j] = u[built.handles.p_ul[j]] = 0.01 * rng.uniform();
  const double tau = u[built.handles.tau] = 0.3;
  std::vector<double> dv(cfg.R), av(cfg.R), bv(cfg.R);
  for (int r = 0; r < cfg.R; ++r) {
    dv[r] = u[built.handles.delta[r]] = 0.1 + rng.uniform();
    av[r] = u[built.handles.alpha[r]] = rng.uniform();
    bv[r] = u[built.handles.beta[r]] = rng.uniform();
  }

  auto find_block = [&](const std::string& name) -> const ConicProblem::Block& {
    for (const auto& blk : prob.blocks())
      if (blk.name == name) return blk;
    REQUIRE(false);
    return prob.blocks()[0];
  };

  for (int k = 0; k < cfg.K; ++k) {
    const auto& blk = find_block("dl_sinr[" + std::to_string(k) + "]");
    double want = w_val[k].quad_form(inst.h[k]) / cfg.gamma_dl_req[k];
    for (int m = 0; m < cfg.K; ++m)
      if (m != k) want -= w_val[m].quad_form(inst.h[k]);
    for (int j = 0; j < cfg.J; ++j) want -= p_val[j] * std::norm(inst.f(j, k));
    want -= cfg.sigma2_dl_w[k];
    const HermitianMatrix got = ConicProblem::eval_block(blk, u);
    CHECK(got(0, 0).real() == doctest::Approx(want).epsilon(1e-10));
  }

  for (int j = 0; j < cfg.J; ++j) {
    const auto& blk = find_block("ul_sinr[" + std::to_string(j) + "]");
    const CVec& vj = inst.receivers.v[j];
    double want = p_val[j] * std::norm(vdot(inst.g[j], vj)) / cfg.gamma_ul_req[j];
    for (int n = 0; n < cfg.J; ++n)
      if (n != j) want -= p_val[n] * std::norm(vdot(inst.g[n], vj));
    want -= si_power(vj, inst.h_si, w_val, cfg.rho);
    want -= cfg.sigma2_ul_w * vnorm2(vj);
    const HermitianMatrix got = ConicProblem::eval_block(blk, u);
    CHECK(got(0, 0).real() == doctest::Approx(want).epsilon(1e-10));
  }

  {
    const auto& blk = find_block("dl_power_budget");
    double want = cfg.P_DL_max_w;
    for (const auto& wk : w_val) want -= wk.trace();
    CHECK(ConicProblem::eval_block(blk, u)(0, 0).real() == doctest::Approx(want).epsilon(1e-12));
  }

  for (int r = 0; r < cfg.R; ++r) {
    const auto& blk = find_block("dl_leakage_robust[" + std::to_string(r) + "]");
    const int n = cfg.N_T;
    // dense reference: [[a I, 0],[0, delta - a]] - B^H (sum W) B, B = [eps I | l_hat]
    HermitianMatrix sum_w(n);
    for (const auto& wk : w_val) sum_w.add_scaled(wk, 1.0);
    const double eps = inst.primary.eps_dl[r];
    ComplexMatrix b(n, n + 1);
    for (int i = 0; i < n; ++i) {
      b(i, i) = eps;
      b(i, n) = inst.primary.l_hat[r][i];
    }
    const ComplexMatrix quad = (b.adjoint() * sum_w.to_matrix()) * b;
    const HermitianMatrix got = ConicProblem::eval_block(blk, u);
    for (int x = 0; x <= n; ++x)
      for (int y = 0; y <= n; ++y) {
        cplx want = -quad(x, y);
        if (x == y) want += (x < n) ? av[r] : (dv[r] - av[r]);
        CHECK(std::abs(got(x, y) - want) <= 1e-12 * (1.0 + std::abs(want)));
      }
  }

  for (int r = 0; r < cfg.R; ++r) {
    const auto& blk = find_block("ul_leakage_robust[" + std::to_string(r) + "]");
    const HermitianMatrix got = ConicProblem::eval_block(blk, u);
    const double eps = inst.primary.eps_ul_stacked[r];
    CVec e_hat(cfg.J);
    for (int j = 0; j < cfg.J; ++j) e_hat[j] = inst.primary.e_hat(j, r);
    for (int x = 0; x < cfg.J; ++x) {
      for (int y = x; y < cfg.J; ++y) {
        const cplx want = (x == y) ? cplx(bv[r] - p_val[x] * eps * eps, 0.0) : cplx(0.0, 0.0);
        CHECK(std::abs(got(x, y) - want) <= 1e-12);
      }
      const cplx want_edge = -p_val[x] * eps * e_hat[x];
      CHECK(std::abs(got(x, cfg.J) - want_edge) <= 1e-12);
    }
    double corner = -bv[r] - dv[r] + tau;
    for (int j = 0; j < cfg.J; ++j) corner -= p_val[j] * std::norm(e_hat[j]);
    CHECK(got(cfg.J, cfg.J).real() == doctest::Approx(corner).epsilon(1e-10));
  }
}

TEST_CASE("builder output is blind to the true primary channels") {
  const SystemConfig cfg = make_default_config();
  const Geometry geo = draw_geometry(cfg, 5, 0);
  ChannelRealization ch1 = draw_realization(cfg, geo, 5, 0);
  ChannelRealization ch2 = ch1;
  // perturb only the true primary channels, keeping estimates and radii
  for (int r = 0; r < cfg.R; ++r)
    for (int i = 0; i < cfg.N_T; ++i) ch2.l_true[r][i] += cplx(1.0, -2.0);
  for (int j = 0; j < cfg.J; ++j)
    for (int r = 0; r < cfg.R; ++r) ch2.e_true(j, r) *= cplx(0.0, 3.0);

  const ReceiverBank bank = zf_receivers(ch1.g);
  const BuiltProblem a = build_relaxed(make_instance(cfg, ch1, bank));
  const BuiltProblem b = build_relaxed(make_instance(cfg, ch2, bank));
  CHECK(problems_equal(a.prob, b.prob));
}

TEST_CASE("trace stage pins the epigraph and swaps the objective to total power") {
  const SystemConfig cfg = make_default_config();
  const RobustInstance inst = random_instance(cfg, 6);

  const double budget = 3e-7;
  const BuiltProblem aux = build_auxiliary(inst, budget);

  // identical constraint census to the relaxation, one fewer parameter
  const BuiltProblem relaxed = build_relaxed(inst);
  CHECK(block_histogram(aux.prob) == block_histogram(relaxed.prob));
  CHECK(aux.prob.num_params() == relaxed.prob.num_params() - 1);
  CHECK(aux.handles.tau == -1);
  CHECK(aux.handles.w.size() == 3);
  CHECK(aux.handles.p_ul.size() == 5);

  // objective = sum_k Tr(W_k)
  std::vector<double> u(aux.prob.num_params(), 0.0);
  Rng rng(7);
  double want_tr = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    HermitianMatrix wk(cfg.N_T);
    for (int i = 0; i < cfg.N_T; ++i) wk.set(i, i, rng.uniform());
    want_tr += wk.trace();
    set_hermitian(u, aux.handles.w[k], wk);
  }
  double got_tr = 0.0;
  for (int i = 0; i < aux.prob.num_params(); ++i) got_tr += aux.prob.objective()[i] * u[i];
  CHECK(got_tr == doctest::Approx(want_tr).epsilon(1e-12));

  // the pinned epigraph lives in the UL leakage constants: at u = 0 the
  // corner reads budget - delta - beta = budget
  for (size_t b = 0; b < aux.prob.blocks().size(); ++b) {
    const auto& blk = aux.prob.blocks()[b];
    if (blk.name.rfind("ul_leakage_robust", 0) != 0) continue;
    std::vector<double> zero(aux.prob.num_params(), 0.0);
    const HermitianMatrix at0 = ConicProblem::eval_block(blk, zero);
    CHECK(at0(cfg.J, cfg.J).real() == doctest::Approx(budget).epsilon(1e-12));
  }
}

TEST_CASE("fixed DL directions null out the other users' channels") {
  Rng rng(8);
  std::vector<CVec> h(3);
  for (CVec& x : h) x = rng.cnormal_vec(6);
  const std::vector<CVec> dirs = zf_dl_directions(h);
  for (int k = 0; k < 3; ++k) {
    CHECK(vnorm(dirs[k]) == doctest::Approx(1.0).epsilon(1e-12));
    for (int m = 0; m < 3; ++m)
      if (m != k) CHECK(std::abs(vdot(h[m], dirs[k])) <= 1e-10 * vnorm(h[m]));
  }

  // orthogonal channels: direction equals the normalized channel
  std::vector<CVec> ortho = {{1, 0, 0}, {0, cplx(0, 2), 0}};
  const auto od = zf_dl_directions(ortho);
  CHECK(std::abs(od[0][0] - 1.0) < 1e-12);
  CHECK(std::abs(od[1][1] - cplx(0, 1)) < 1e-12);

  // single user: normalized channel, no null-space constraint
  const auto sd = zf_dl_directions({CVec{cplx(3, 4)}});
  CHECK(std::abs(sd[0][0] - cplx(0.6, 0.8)) < 1e-12);

  // dependent channels must be rejected
  CVec a = {1, 2, 3};
  CHECK_THROWS_AS(zf_dl_directions({a, a, a}), SingularChannelError);
}

TEST_CASE("fixed-direction restriction matches its dense rank-one expansion") {
  const SystemConfig cfg = make_default_config();
  const RobustInstance inst = random_instance(cfg, 9);
  const BuiltProblem b1 = build_baseline1(inst);

  CHECK(b1.handles.p_dl.size() == 3);
  CHECK(b1.handles.w.empty());
  CHECK(b1.handles.dl_dirs.size() == 3);

  Rng rng(10);
  std::vector<double> u(b1.prob.num_params(), 0.0);
  std::vector<double> p_dl(cfg.K);
  for (int k = 0; k < cfg.K; ++k) p_dl[k] = u[b1.handles.p_dl[k]] = 0.2 * rng.uniform();
  std::vector<double> p_ul(cfg.J);
  for (int j = 0; j < cfg.J; ++j) p_ul[j] = u[b1.handles.p_ul[j]] = 0.01 * rng.uniform();
  u[b1.handles.tau] = 0.1;
  for (int r = 0; r < cfg.R; ++r) {
    u[b1.handles.delta[r]] = 0.05;
    u[b1.handles.alpha[r]] = 0.4;
    u[b1.handles.beta[r]] = 0.3;
  }

  std::vector<HermitianMatrix> w_val;
  for (int k = 0; k < cfg.K; ++k) {
    HermitianMatrix wk = HermitianMatrix::outer(b1.handles.dl_dirs[k]);
    wk.scale(p_dl[k]);
    w_val.push_back(wk);
  }

  for (int k = 0; k < cfg.K; ++k) {
    double want = w_val[k].quad_form(inst.h[k]) / cfg.gamma_dl_req[k];
    for (int m = 0; m < cfg.K; ++m)
      if (m != k) want -= w_val[m].quad_form(inst.h[k]);
    for (int j = 0; j < cfg.J; ++j) want -= p_ul[j] * std::norm(inst.f(j, k));
    want -= cfg.sigma2_dl_w[k];
    for (const auto& blk : b1.prob.blocks()) {
      if (blk.name == "dl_sinr[" + std::to_string(k) + "]")
        CHECK(ConicProblem::eval_block(blk, u)(0, 0).real() ==
              doctest::Approx(want).epsilon(1e-10));
    }
  }

  for (int r = 0; r < cfg.R; ++r) {
    for (const auto& blk : b1.prob.blocks()) {
      if (blk.name != "dl_leakage_robust[" + std::to_string(r) + "]") continue;
      const int n = cfg.N_T;
      HermitianMatrix sum_w(n);
      for (const auto& wk : w_val) sum_w.add_scaled(wk, 1.0);
      const double eps = inst.primary.eps_dl[r];
      ComplexMatrix b(n, n + 1);
      for (int i = 0; i < n; ++i) {
        b(i, i) = eps;
        b(i, n) = inst.primary.l_hat[r][i];
      }
      const ComplexMatrix quad = (b.adjoint() * sum_w.to_matrix()) * b;
      const HermitianMatrix got = ConicProblem::eval_block(blk, u);
      for (int x = 0; x <= n; ++x)
        for (int y = 0; y <= n; ++y) {
          cplx want = -quad(x, y);
          if (x == y) want += (x < n) ? 0.4 : (0.05 - 0.4);
          CHECK(std::abs(got(x, y) - want) <= 1e-10 * (1.0 + std::abs(want)));
        }
    }
  }
}

TEST_CASE("half-duplex SINR compensation") {
  CHECK(hd_sinr_target(1.0) == doctest::Approx(3.0));
  const double g6db = db_to_linear(6.0);
  CHECK(hd_sinr_target(g6db) == doctest::Approx(23.81).epsilon(1e-3));
  CHECK(linear_to_db(hd_sinr_target(g6db)) == doctest::Approx(13.77).epsilon(1e-3));
  CHECK(hd_sinr_target(1e-9) == doctest::Approx(2e-9).epsilon(1e-6));
  CHECK_THROWS_AS(hd_sinr_target(0.0), std::invalid_argument);
}

TEST_CASE("half-duplex phase problems carry the right variables") {
  const SystemConfig cfg = make_default_config();
  const RobustInstance inst = random_instance(cfg, 12);

  const BuiltProblem dl = build_baseline2_dl(inst);
  CHECK(dl.handles.w.size() == 3);
  CHECK(dl.handles.p_ul == std::vector<int>{});
  CHECK(dl.handles.tau >= 0);
  const auto dl_hist = block_histogram(dl.prob);
  CHECK(dl_hist.at("dl_leakage_robust[]/7") == 2);
  CHECK(dl_hist.count("ul_sinr[]/1") == 0);
  // no cross interference: the DL SINR rows reference no UL power params
  for (const auto& blk : dl.prob.blocks()) {
    if (blk.name.rfind("dl_sinr", 0) != 0) continue;
    for (const auto& e : blk.entries) CHECK(e.param < 3 * 36 + 1 + 2);  // W, tau, alpha only
  }

  const ReceiverBank mmse = mmse_receivers(inst.g, cfg.P_UL_max_w, cfg.sigma2_ul_w);
  const BuiltProblem ul = build_baseline2_ul(inst, mmse);
  CHECK(ul.handles.w.empty());
  CHECK(ul.handles.p_ul.size() == 5);
  const auto ul_hist = block_histogram(ul.prob);
  CHECK(ul_hist.at("ul_leakage_robust[]/6") == 2);
  CHECK(ul_hist.at("ul_sinr[]/1") == 5);
  CHECK(ul_hist.count("dl_power_budget/1") == 0);

  // half-duplex UL runs with no self-interference: at P = 0 the SINR rows
  // must evaluate to exactly -sigma^2 ||v||^2 regardless of any W
  std::vector<double> zero(ul.prob.num_params(), 0.0);
  int checked = 0;
  for (const auto& blk : ul.prob.blocks()) {
    if (blk.name.rfind("ul_sinr", 0) != 0) continue;
    const int j = checked++;
    CHECK(ConicProblem::eval_block(blk, zero)(0, 0).real() ==
          doctest::Approx(-cfg.sigma2_ul_w * vnorm2(mmse.v[j])).epsilon(1e-12));
  }
  CHECK(checked == 5);
}
