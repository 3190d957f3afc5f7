#include "fdcr/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "fdcr/rng.hpp"

namespace fdcr {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

// substream families; distinct links never share a stream
enum StreamFamily : std::uint64_t {
  kGeometry = 0,
  kDlChannel = 1,
  kUlChannel = 2,
  kCrossChannel = 3,
  kSelfInterference = 4,
  kPrimaryDl = 5,
  kPrimaryUl = 6,
  kPrimaryDlError = 7,
  kPrimaryUlError = 8,
};

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void SystemConfig::validate() const {
  require(N_T > 1, "SystemConfig: N_T must exceed 1");
  require(N_T >= J, "SystemConfig: N_T must be at least the number of UL users");
  require(K > 0 && J > 0 && R > 0, "SystemConfig: K, J, R must be positive");
  require(P_DL_max_w > 0.0, "SystemConfig: DL power budget must be positive");
  require(static_cast<int>(P_UL_max_w.size()) == J, "SystemConfig: P_UL_max_w size must equal J");
  for (double p : P_UL_max_w) require(p > 0.0, "SystemConfig: UL power budgets must be positive");
  require(static_cast<int>(sigma2_dl_w.size()) == K, "SystemConfig: sigma2_dl_w size must equal K");
  for (double s : sigma2_dl_w) require(s > 0.0, "SystemConfig: DL noise must be positive");
  require(sigma2_ul_w > 0.0, "SystemConfig: UL noise must be positive");
  require(rho > 0.0 && rho < 1.0, "SystemConfig: rho must lie in (0, 1)");
  require(static_cast<int>(gamma_dl_req.size()) == K, "SystemConfig: gamma_dl_req size must equal K");
  for (double g : gamma_dl_req) require(g > 0.0, "SystemConfig: DL SINR targets must be positive");
  require(static_cast<int>(gamma_ul_req.size()) == J, "SystemConfig: gamma_ul_req size must equal J");
  for (double g : gamma_ul_req) require(g > 0.0, "SystemConfig: UL SINR targets must be positive");
  require(kappa2_est >= 0.0 && kappa2_est < 1.0, "SystemConfig: kappa2_est must lie in [0, 1)");
  require(carrier_hz > 0.0 && bandwidth_hz > 0.0, "SystemConfig: carrier/bandwidth must be positive");
  require(d_ref_m > 0.0 && d_max_m >= d_ref_m, "SystemConfig: need 0 < d_ref <= d_max");
}

SystemConfig make_default_config() {
  SystemConfig cfg;
  cfg.P_DL_max_w = dbm_to_watts(30.0);
  cfg.P_UL_max_w.assign(cfg.J, dbm_to_watts(10.0));
  cfg.sigma2_dl_w.assign(cfg.K, dbm_to_watts(-90.0));
  cfg.sigma2_ul_w = dbm_to_watts(-90.0);
  cfg.gamma_dl_req.assign(cfg.K, db_to_linear(10.0));
  cfg.gamma_ul_req.assign(cfg.J, db_to_linear(6.0));
  cfg.validate();
  return cfg;
}

double path_loss_db(double d_m, const SystemConfig& cfg) {
  if (d_m < cfg.d_ref_m) throw std::domain_error("path_loss_db: distance below reference");
  const double fspl_ref =
      20.0 * std::log10(4.0 * M_PI * cfg.d_ref_m * cfg.carrier_hz / kSpeedOfLight);
  return fspl_ref + 10.0 * cfg.pathloss_exponent * std::log10(d_m / cfg.d_ref_m);
}

double link_gain_linear(double d_m, const SystemConfig& cfg, bool bs_anchored) {
  const double gain_db = bs_anchored ? cfg.antenna_gain_dbi : 0.0;
  return db_to_linear(gain_db - path_loss_db(d_m, cfg));
}

namespace {

struct Point {
  double x, y;
};

Point draw_annulus_point(Rng& rng, double a, double b) {
  // uniform over the annulus: P(r <= x) = (x^2 - a^2) / (b^2 - a^2)
  const double r = std::sqrt(a * a + rng.uniform() * (b * b - a * a));
  const double th = 2.0 * M_PI * rng.uniform();
  return {r * std::cos(th), r * std::sin(th)};
}

double dist(const Point& p, const Point& q) {
  return std::hypot(p.x - q.x, p.y - q.y);
}

}  // namespace

Geometry draw_geometry(const SystemConfig& cfg, std::uint64_t seed, std::uint64_t trial) {
  cfg.validate();
  Rng rng(derive_stream(seed, {trial, kGeometry}));

  std::vector<Point> dl(cfg.K), ul(cfg.J), pu(cfg.R);
  for (Point& p : dl) p = draw_annulus_point(rng, cfg.d_ref_m, cfg.d_max_m);
  for (Point& p : ul) p = draw_annulus_point(rng, cfg.d_ref_m, cfg.d_max_m);
  for (Point& p : pu) p = draw_annulus_point(rng, cfg.d_ref_m, cfg.d_max_m);

  Geometry geo;
  geo.d_pu_tx_m = cfg.pu_tx_distance_m;
  geo.d_bs_dl.resize(cfg.K);
  geo.d_bs_ul.resize(cfg.J);
  geo.d_bs_pu.resize(cfg.R);
  const Point bs{0.0, 0.0};
  for (int k = 0; k < cfg.K; ++k) geo.d_bs_dl[k] = dist(bs, dl[k]);
  for (int j = 0; j < cfg.J; ++j) geo.d_bs_ul[j] = dist(bs, ul[j]);
  for (int r = 0; r < cfg.R; ++r) geo.d_bs_pu[r] = dist(bs, pu[r]);

  // inter-user links can land closer than d_ref; clamp so the path-loss
  // model's domain is respected for every stored distance
  geo.d_ul_dl.assign(cfg.J, std::vector<double>(cfg.K));
  geo.d_ul_pu.assign(cfg.J, std::vector<double>(cfg.R));
  for (int j = 0; j < cfg.J; ++j) {
    for (int k = 0; k < cfg.K; ++k)
      geo.d_ul_dl[j][k] = std::max(dist(ul[j], dl[k]), cfg.d_ref_m);
    for (int r = 0; r < cfg.R; ++r)
      geo.d_ul_pu[j][r] = std::max(dist(ul[j], pu[r]), cfg.d_ref_m);
  }
  return geo;
}

namespace {

CVec faded_vector(Rng& rng, int n, double gain_linear) {
  const double amp = std::sqrt(gain_linear);
  CVec v = rng.cnormal_vec(n);
  for (cplx& x : v) x *= amp;
  return v;
}

}  // namespace

ChannelRealization draw_realization(const SystemConfig& cfg, const Geometry& geo,
                                    std::uint64_t seed, std::uint64_t trial) {
  cfg.validate();
  ChannelRealization ch;

  ch.h.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    Rng rng(derive_stream(seed, {trial, kDlChannel, static_cast<std::uint64_t>(k)}));
    ch.h[k] = faded_vector(rng, cfg.N_T, link_gain_linear(geo.d_bs_dl[k], cfg, true));
  }

  ch.g.resize(cfg.J);
  for (int j = 0; j < cfg.J; ++j) {
    Rng rng(derive_stream(seed, {trial, kUlChannel, static_cast<std::uint64_t>(j)}));
    ch.g[j] = faded_vector(rng, cfg.N_T, link_gain_linear(geo.d_bs_ul[j], cfg, true));
  }

  ch.f = ComplexMatrix(cfg.J, cfg.K);
  for (int j = 0; j < cfg.J; ++j) {
    for (int k = 0; k < cfg.K; ++k) {
      Rng rng(derive_stream(seed, {trial, kCrossChannel, static_cast<std::uint64_t>(j),
                                   static_cast<std::uint64_t>(k)}));
      ch.f(j, k) =
          std::sqrt(link_gain_linear(geo.d_ul_dl[j][k], cfg, false)) * rng.cnormal();
    }
  }

  {
    // Rician self-interference, unit second moment per entry: the residual SI
    // power level enters only through rho downstream.
    Rng rng(derive_stream(seed, {trial, kSelfInterference}));
    const double k_r = db_to_linear(cfg.rician_factor_db);
    const double los = std::sqrt(k_r / (k_r + 1.0));
    const double nlos = std::sqrt(1.0 / (k_r + 1.0));
    ch.h_si = ComplexMatrix(cfg.N_T, cfg.N_T);
    for (int i = 0; i < cfg.N_T; ++i)
      for (int j = 0; j < cfg.N_T; ++j) ch.h_si(i, j) = los + nlos * rng.cnormal();
  }

  const double kappa = std::sqrt(cfg.kappa2_est);

  ch.l_true.resize(cfg.R);
  ch.l_hat.resize(cfg.R);
  ch.eps_dl.resize(cfg.R);
  for (int r = 0; r < cfg.R; ++r) {
    Rng rng(derive_stream(seed, {trial, kPrimaryDl, static_cast<std::uint64_t>(r)}));
    ch.l_true[r] = faded_vector(rng, cfg.N_T, link_gain_linear(geo.d_bs_pu[r], cfg, true));
    ch.eps_dl[r] = kappa * vnorm(ch.l_true[r]);

    // unit-ball direction drawn independently of kappa, then scaled: draws at
    // two kappa values share the direction, giving nested uncertainty balls
    Rng err_rng(derive_stream(seed, {trial, kPrimaryDlError, static_cast<std::uint64_t>(r)}));
    const CVec unit_err = err_rng.uniform_ball(cfg.N_T, 1.0);
    ch.l_hat[r] = ch.l_true[r];
    for (int i = 0; i < cfg.N_T; ++i) ch.l_hat[r][i] -= ch.eps_dl[r] * unit_err[i];
  }

  ch.e_true = ComplexMatrix(cfg.J, cfg.R);
  ch.e_hat = ComplexMatrix(cfg.J, cfg.R);
  ch.eps_ul.assign(cfg.J, std::vector<double>(cfg.R));
  for (int j = 0; j < cfg.J; ++j) {
    for (int r = 0; r < cfg.R; ++r) {
      Rng rng(derive_stream(seed, {trial, kPrimaryUl, static_cast<std::uint64_t>(j),
                                   static_cast<std::uint64_t>(r)}));
      ch.e_true(j, r) =
          std::sqrt(link_gain_linear(geo.d_ul_pu[j][r], cfg, false)) * rng.cnormal();
      ch.eps_ul[j][r] = kappa * std::abs(ch.e_true(j, r));

      Rng err_rng(derive_stream(seed, {trial, kPrimaryUlError, static_cast<std::uint64_t>(j),
                                       static_cast<std::uint64_t>(r)}));
      ch.e_hat(j, r) = ch.e_true(j, r) - ch.eps_ul[j][r] * err_rng.uniform_disk(1.0);
    }
  }

  return ch;
}

}  // namespace fdcr
