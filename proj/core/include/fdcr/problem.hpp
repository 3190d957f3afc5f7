#pragma once

#include <string>
#include <vector>

#include "fdcr/channel.hpp"
#include "fdcr/receivers.hpp"

namespace fdcr {

// Handle to a Hermitian matrix variable inside a ConicProblem. The matrix is
// parameterized by dim^2 reals: the diagonal first, then (re, im) pairs for
// the strict upper triangle in row-major order.
struct MatrixVar {
  std::string name;
  int dim = 0;
  int first_param = -1;

  int param_count() const { return dim * dim; }
  int diag_param(int i) const { return first_param + i; }
  int re_param(int p, int q) const { return first_param + dim + 2 * upper_index(p, q); }
  int im_param(int p, int q) const { return first_param + dim + 2 * upper_index(p, q) + 1; }

 private:
  int upper_index(int p, int q) const {
    // index of (p,q), p<q, in row-major strict upper order
    return p * dim - p * (p + 1) / 2 + (q - p - 1);
  }
};

// Linear conic program over real parameters u:
//   minimize  c^T u  subject to  S_b = G_{b,0} + sum_i u_i G_{b,i}  PSD for all b.
// Scalar inequalities are 1x1 blocks; Hermitian matrix variables expand into
// per-entry parameters plus one PSD block tying them together.
class ConicProblem {
 public:
  struct Entry {
    int param;
    int r, c;  // r <= c
    cplx coeff;
  };
  struct Block {
    std::string name;
    int dim = 0;
    HermitianMatrix constant;
    std::vector<Entry> entries;
  };

  int add_scalar(const std::string& name);
  MatrixVar add_hermitian_var(const std::string& name, int dim);

  void add_objective(int param, double coeff);

  int new_block(const std::string& name, int dim);
  void add_const(int block, int r, int c, cplx v);
  void add_coeff(int block, int r, int c, int param, cplx v);

  // entry (r,c) += sign * Tr(a W)
  void add_trace_coeff(int block, int r, int c, const MatrixVar& w, const HermitianMatrix& a,
                       double sign);
  // whole block += sign * u_param * (vec vec^H)
  void add_outer_coeff(int block, int param, const CVec& vec, double sign);
  // whole block += sign * B^H W B,  B: w.dim x block.dim
  void add_congruence(int block, const MatrixVar& w, const ComplexMatrix& b, double sign);

  int num_params() const { return static_cast<int>(names_.size()); }
  const std::vector<double>& objective() const { return obj_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<std::string>& param_names() const { return names_; }

  static HermitianMatrix eval_block(const Block& blk, const std::vector<double>& u);
  HermitianMatrix extract_hermitian(const MatrixVar& w, const std::vector<double>& u) const;

 private:
  std::vector<Block> blocks_;
  std::vector<double> obj_;
  std::vector<std::string> names_;
};

// Primary-side channel knowledge available to the resource allocator:
// estimates and error-ball radii only. True channels never enter this type,
// so problem builders cannot depend on them even accidentally.
struct PrimaryCsi {
  std::vector<CVec> l_hat;                  // R estimated BS->PU vectors
  ComplexMatrix e_hat;                      // J x R estimated UL->PU scalars
  std::vector<double> eps_dl;               // R ball radii
  std::vector<double> eps_ul_stacked;       // R radii of the stacked UL error vector
};

PrimaryCsi primary_csi_view(const ChannelRealization& ch);

struct RobustInstance {
  SystemConfig cfg;
  std::vector<CVec> h;   // exact secondary DL channels
  std::vector<CVec> g;   // exact secondary UL channels
  ComplexMatrix f;       // exact UL->DL cross channels
  ComplexMatrix h_si;    // exact self-interference channel
  ReceiverBank receivers;
  PrimaryCsi primary;
};

RobustInstance make_instance(const SystemConfig& cfg, const ChannelRealization& ch,
                             ReceiverBank receivers);

// Parameter handles for the constructed programs; -1 marks an absent variable
// (for instance the multiplier of a leakage LMI degenerates when eps = 0 and
// the constraint is emitted in nominal scalar form instead).
struct ProblemHandles {
  std::vector<MatrixVar> w;  // DL covariance variables (empty when DL is rank-constrained)
  std::vector<int> p_dl;     // scalar DL powers (fixed-direction baseline only)
  std::vector<CVec> dl_dirs; // unit directions paired with p_dl
  std::vector<int> p_ul;     // UL transmit powers
  int tau = -1;              // leakage epigraph
  std::vector<int> delta;    // per-PU DL leakage slack
  std::vector<int> alpha;    // per-PU DL ball multipliers, in leakage units (eps^2 absorbed)
  std::vector<int> beta;     // per-PU UL ball multipliers, in leakage units (eps^2 absorbed)
};

struct BuiltProblem {
  ConicProblem prob;
  ProblemHandles handles;
};

// Scalar part of a solved allocation, used to freeze the rank-recovery stage.
struct FrozenScalars {
  std::vector<double> p_ul;
  double tau = 0.0;
  std::vector<double> delta, alpha, beta;
};

FrozenScalars extract_scalars(const BuiltProblem& built, const std::vector<double>& u);

// min tau over {W_k PSD, P, tau, slacks} with DL/UL SINR floors, power limits,
// and per-PU robust leakage LMIs (semidefinite relaxation: no rank condition).
BuiltProblem build_relaxed(const RobustInstance& inst);

// min tau + trace_weight * sum_k Tr(W_k): the relaxation plus a total-power
// tie-break. Any positive weight adds a positive-definite term to every
// covariance's stationarity certificate, so the minimizer is rank one; the
// epigraph drifts above the pure minimum by O(trace_weight^2), which callers
// keep inside their acceptance gate by scaling the weight with
// tau* / total power. Throws std::invalid_argument unless trace_weight > 0.
BuiltProblem build_auxiliary(const RobustInstance& inst, double trace_weight);

// Unit-norm DL directions: h_k projected onto the null space of the other DL
// channels. Throws SingularChannelError for dependent channels.
std::vector<CVec> zf_dl_directions(const std::vector<CVec>& h);

// Fixed-direction restriction of the epigraph program: W_k = p_k d_k d_k^H
// with scalar p_k >= 0 and d_k = dirs[k] normalized to unit norm. Throws
// std::invalid_argument on a direction count/length mismatch or a zero
// direction.
BuiltProblem build_fixed_directions(const RobustInstance& inst, const std::vector<CVec>& dirs);

// Fixed-direction restriction along the zero-forcing directions.
BuiltProblem build_baseline1(const RobustInstance& inst);

// Half-duplex per-phase SINR target keeping the two-phase rate equal to the
// full-duplex one: (1 + g)^2 - 1.
double hd_sinr_target(double gamma_linear);

// Half-duplex phases. DL: min epigraph over worst-case DL leakage, no UL
// cross interference. UL: min epigraph over worst-case UL leakage with the
// given receive bank and no self-interference.
BuiltProblem build_baseline2_dl(const RobustInstance& inst);
BuiltProblem build_baseline2_ul(const RobustInstance& inst, const ReceiverBank& receivers);

}  // namespace fdcr
