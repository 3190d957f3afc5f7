#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdcr {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

// ---- complex vector helpers ------------------------------------------------

cplx vdot(const CVec& a, const CVec& b);  // a^H b
double vnorm(const CVec& a);
double vnorm2(const CVec& a);  // squared norm

// Dense complex matrix, row-major storage. Entries must be finite.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(int rows, int cols);
  ComplexMatrix(int rows, int cols, std::vector<cplx> data);

  static ComplexMatrix identity(int n);
  static ComplexMatrix from_columns(const std::vector<CVec>& cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  cplx& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  cplx operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  ComplexMatrix adjoint() const;
  ComplexMatrix operator*(const ComplexMatrix& rhs) const;
  CVec operator*(const CVec& v) const;
  CVec column(int c) const;

  double frob_norm() const;
  void check_finite() const;  // throws std::invalid_argument on NaN/Inf

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<cplx> data_;
};

// Real symmetric matrix, dense row-major full storage. Used for the real
// embedding of Hermitian blocks and inside the conic solver.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}

  static SymMatrix identity(int n);

  int dim() const { return n_; }
  double& at(int r, int c) { return a_[static_cast<size_t>(r) * n_ + c]; }
  double at(int r, int c) const { return a_[static_cast<size_t>(r) * n_ + c]; }
  void set_sym(int r, int c, double v) {
    at(r, c) = v;
    at(c, r) = v;
  }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  double trace() const;
  double frob_norm() const;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// Hermitian matrix with H == H^H enforced by construction: set() mirrors the
// conjugate entry and pins the diagonal real.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(int dim);

  static HermitianMatrix identity(int dim);
  static HermitianMatrix outer(const CVec& v);  // v v^H
  // Symmetrizes (M + M^H)/2; throws if the asymmetry exceeds tol * ||M||_F.
  static HermitianMatrix from_matrix(const ComplexMatrix& m, double tol = 1e-9);

  int dim() const { return n_; }
  cplx operator()(int r, int c) const { return a_[static_cast<size_t>(r) * n_ + c]; }
  void set(int r, int c, cplx v);
  void add(int r, int c, cplx v);

  double trace() const;
  double frob_norm() const;
  void scale(double s);
  void add_scaled(const HermitianMatrix& h, double s);
  CVec operator*(const CVec& v) const;
  ComplexMatrix to_matrix() const;

  // x^H H x (real by hermiticity)
  double quad_form(const CVec& x) const;

  void check_finite() const;

 private:
  int n_ = 0;
  std::vector<cplx> a_;
};

struct EigResult {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column j pairs with values[j]
};

// Eigendecomposition via cyclic Jacobi on the 2N real embedding.
// Throws std::runtime_error if Jacobi fails to converge within the sweep cap.
EigResult hermitian_eig(const HermitianMatrix& h);

// min eigenvalue >= -tol * max(1, ||H||_F)
bool is_psd(const HermitianMatrix& h, double tol);

// [[Re H, -Im H], [Im H, Re H]]; PSD iff H PSD, trace doubles.
SymMatrix real_embed(const HermitianMatrix& h);

// ---- real symmetric machinery (shared with the conic solver) ---------------

// Cyclic Jacobi. a: row-major n*n symmetric input (destroyed); evals ascending;
// evecs row-major with column j the eigenvector for evals[j]. Returns false if
// the off-diagonal norm fails to reach ~machine precision within max_sweeps.
bool sym_jacobi_eig(int n, double* a, double* evals, double* evecs, int max_sweeps = 60);

struct SymEig {
  std::vector<double> values;
  SymMatrix vectors;
};
SymEig sym_eig(const SymMatrix& a);  // throws on non-convergence

// In-place lower Cholesky of a row-major symmetric matrix (full storage, only
// the lower triangle is referenced/written). Returns false if not PD.
bool cholesky_in_place(int n, double* a, double shift = 0.0);
// Solve L L^T x = b given the factor from cholesky_in_place.
void cholesky_solve(int n, const double* l, double* b);

// ---- complex Hermitian positive definite solves -----------------------------

// Solves A X = B for HPD A via complex Cholesky. Throws on non-PD input.
ComplexMatrix solve_hpd(const HermitianMatrix& a, const ComplexMatrix& b);
CVec solve_hpd(const HermitianMatrix& a, const CVec& b);

}  // namespace fdcr
