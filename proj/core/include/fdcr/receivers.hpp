#pragma once

#include <stdexcept>
#include <vector>

#include "fdcr/channel.hpp"
#include "fdcr/linalg.hpp"

namespace fdcr {

// Raised when the stacked UL channel matrix is numerically rank deficient;
// callers treat the trial as degenerate and resample.
class SingularChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReceiverBank {
  enum class Flavor { zero_forcing, mmse };
  Flavor flavor = Flavor::zero_forcing;
  std::vector<CVec> v;  // one receive vector per UL user
};

// V = G (G^H G)^{-1} so that g_n^H v_j = delta_nj. Throws SingularChannelError
// when cond(G) exceeds 1e12.
ReceiverBank zf_receivers(const std::vector<CVec>& g);

// v_j = (sum_n P_n g_n g_n^H + sigma2 I)^{-1} g_j. Including user j's own term
// leaves the resulting SINR unchanged.
ReceiverBank mmse_receivers(const std::vector<CVec>& g, const std::vector<double>& p_ul_w,
                            double sigma2_ul_w);

// Residual self-interference power rho * Tr(v v^H diag(sum_k H W_k H^H)).
double si_power(const CVec& v, const ComplexMatrix& h_si,
                const std::vector<HermitianMatrix>& w_dl, double rho);

// |h_k^H w_k|^2 / (sum_{m != k} |h_k^H w_m|^2 + sum_j P_j |f_jk|^2 + sigma2_k)
double evaluate_dl_sinr(int k, const std::vector<CVec>& w_dl, const std::vector<double>& p_ul_w,
                        const ChannelRealization& ch, const SystemConfig& cfg);

// P_j |g_j^H v_j|^2 / (sum_{n != j} P_n |g_n^H v_j|^2 + SI + sigma2 ||v_j||^2)
double evaluate_ul_sinr(int j, const ReceiverBank& bank, const std::vector<double>& p_ul_w,
                        const std::vector<HermitianMatrix>& w_dl, const ChannelRealization& ch,
                        const SystemConfig& cfg);

}  // namespace fdcr
