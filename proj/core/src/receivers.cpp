#include "fdcr/receivers.hpp"

#include <cmath>

namespace fdcr {

ReceiverBank zf_receivers(const std::vector<CVec>& g) {
  const int j_users = static_cast<int>(g.size());
  if (j_users == 0) throw std::invalid_argument("zf_receivers: no UL channels");
  const ComplexMatrix gm = ComplexMatrix::from_columns(g);
  const HermitianMatrix gram = HermitianMatrix::from_matrix(gm.adjoint() * gm, 1e-8);

  const EigResult eig = hermitian_eig(gram);
  const double lo = eig.values.front();
  const double hi = eig.values.back();
  if (!(lo > 0.0) || std::sqrt(hi / lo) > 1e12)
    throw SingularChannelError("zf_receivers: UL channel matrix is numerically rank deficient");

  const ComplexMatrix inv = solve_hpd(gram, ComplexMatrix::identity(j_users));
  const ComplexMatrix v = gm * inv;
  ReceiverBank bank;
  bank.flavor = ReceiverBank::Flavor::zero_forcing;
  bank.v.resize(j_users);
  for (int j = 0; j < j_users; ++j) bank.v[j] = v.column(j);
  return bank;
}

ReceiverBank mmse_receivers(const std::vector<CVec>& g, const std::vector<double>& p_ul_w,
                            double sigma2_ul_w) {
  const int j_users = static_cast<int>(g.size());
  if (j_users == 0) throw std::invalid_argument("mmse_receivers: no UL channels");
  if (static_cast<int>(p_ul_w.size()) != j_users)
    throw std::invalid_argument("mmse_receivers: power vector size mismatch");
  if (!(sigma2_ul_w > 0.0)) throw std::invalid_argument("mmse_receivers: noise must be positive");

  const int n = static_cast<int>(g[0].size());
  HermitianMatrix cov = HermitianMatrix::identity(n);
  cov.scale(sigma2_ul_w);
  for (int j = 0; j < j_users; ++j) cov.add_scaled(HermitianMatrix::outer(g[j]), p_ul_w[j]);

  ReceiverBank bank;
  bank.flavor = ReceiverBank::Flavor::mmse;
  bank.v.resize(j_users);
  for (int j = 0; j < j_users; ++j) bank.v[j] = solve_hpd(cov, g[j]);
  return bank;
}

double si_power(const CVec& v, const ComplexMatrix& h_si,
                const std::vector<HermitianMatrix>& w_dl, double rho) {
  const int n = h_si.rows();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    // (H W H^H)_{ii} = u^H W u with u = H^H e_i
    CVec u(n);
    for (int a = 0; a < n; ++a) u[a] = std::conj(h_si(i, a));
    double diag_i = 0.0;
    for (const HermitianMatrix& w : w_dl) diag_i += w.quad_form(u);
    total += std::norm(v[i]) * diag_i;
  }
  return rho * total;
}

double evaluate_dl_sinr(int k, const std::vector<CVec>& w_dl, const std::vector<double>& p_ul_w,
                        const ChannelRealization& ch, const SystemConfig& cfg) {
  const CVec& hk = ch.h[k];
  const double signal = std::norm(vdot(hk, w_dl[k]));
  double inter = 0.0;
  for (int m = 0; m < static_cast<int>(w_dl.size()); ++m)
    if (m != k) inter += std::norm(vdot(hk, w_dl[m]));
  double cci = 0.0;
  for (int j = 0; j < static_cast<int>(p_ul_w.size()); ++j)
    cci += p_ul_w[j] * std::norm(ch.f(j, k));
  return signal / (inter + cci + cfg.sigma2_dl_w[k]);
}

double evaluate_ul_sinr(int j, const ReceiverBank& bank, const std::vector<double>& p_ul_w,
                        const std::vector<HermitianMatrix>& w_dl, const ChannelRealization& ch,
                        const SystemConfig& cfg) {
  const CVec& vj = bank.v[j];
  const double signal = p_ul_w[j] * std::norm(vdot(ch.g[j], vj));
  double inter = 0.0;
  for (int n = 0; n < static_cast<int>(p_ul_w.size()); ++n)
    if (n != j) inter += p_ul_w[n] * std::norm(vdot(ch.g[n], vj));
  const double si = si_power(vj, ch.h_si, w_dl, cfg.rho);
  return signal / (inter + si + cfg.sigma2_ul_w * vnorm2(vj));
}

}  // namespace fdcr
