#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fdcr/linalg.hpp"

namespace fdcr {

// Scenario constants for one full-duplex secondary network instance.
// Vector fields are per-user; sizes must match K/J respectively.
struct SystemConfig {
  int K = 3;    // secondary DL users
  int J = 5;    // secondary UL users
  int R = 2;    // primary receivers
  int N_T = 6;  // BS antennas

  double P_DL_max_w = 1.0;                  // total DL budget
  std::vector<double> P_UL_max_w;           // per UL user
  std::vector<double> sigma2_dl_w;          // per DL user noise
  double sigma2_ul_w = 1e-12;
  double rho = 1e-8;                        // residual SI factor
  std::vector<double> gamma_dl_req;         // linear SINR targets
  std::vector<double> gamma_ul_req;
  double kappa2_est = 0.05;                 // normalized CSI error power

  double carrier_hz = 1.9e9;
  double bandwidth_hz = 200e3;
  double pathloss_exponent = 3.6;
  double antenna_gain_dbi = 10.0;
  double rician_factor_db = 5.0;
  double d_ref_m = 5.0;
  double d_max_m = 50.0;
  double pu_tx_distance_m = 100.0;  // recorded for completeness; interference folded into noise

  void validate() const;  // throws std::invalid_argument on violated invariants
};

// Table-style defaults: K=3, J=5, R=2, N_T=6, 30 dBm DL budget, 10 dBm per UL
// user, -90 dBm noise, 10 dB DL and 6 dB UL targets, kappa^2 = 5%.
SystemConfig make_default_config();

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

// Distances in meters. BS-anchored links stay inside [d_ref, d_max]; inter-user
// links are clamped from below at d_ref so the path-loss model's domain holds.
struct Geometry {
  std::vector<double> d_bs_dl;               // K
  std::vector<double> d_bs_ul;               // J
  std::vector<double> d_bs_pu;               // R
  std::vector<std::vector<double>> d_ul_dl;  // J x K
  std::vector<std::vector<double>> d_ul_pu;  // J x R
  double d_pu_tx_m = 0.0;
};

// One fading + estimation draw. True and estimated primary-side channels obey
// ||l_true - l_hat|| <= eps_dl and |e_true - e_hat| <= eps_ul entrywise.
struct ChannelRealization {
  std::vector<CVec> h;   // K vectors of length N_T (BS -> DL user)
  std::vector<CVec> g;   // J vectors of length N_T (UL user -> BS)
  ComplexMatrix f;       // J x K scalars (UL user -> DL user)
  ComplexMatrix h_si;    // N_T x N_T self-interference
  std::vector<CVec> l_true, l_hat;       // R vectors (BS -> primary receiver)
  ComplexMatrix e_true, e_hat;           // J x R (UL user -> primary receiver)
  std::vector<double> eps_dl;            // R
  std::vector<std::vector<double>> eps_ul;  // J x R
};

// Log-distance path loss: free-space loss at d_ref, exponent rolloff beyond.
// Throws std::domain_error for d < d_ref.
double path_loss_db(double d_m, const SystemConfig& cfg);

// Linear power gain of a link; BS-anchored links get the antenna gain once.
double link_gain_linear(double d_m, const SystemConfig& cfg, bool bs_anchored);

// Positions uniform in the annulus [d_ref, d_max] around the BS.
// Deterministic in (seed, trial).
Geometry draw_geometry(const SystemConfig& cfg, std::uint64_t seed, std::uint64_t trial);

// Full channel draw. Substreams are derived per (trial, link family, index),
// so scalar links replay identically when N_T changes, and the estimation
// error direction is drawn on the unit ball before scaling by eps: two draws
// differing only in kappa share the same error direction with nested radii.
ChannelRealization draw_realization(const SystemConfig& cfg, const Geometry& geo,
                                    std::uint64_t seed, std::uint64_t trial);

}  // namespace fdcr
