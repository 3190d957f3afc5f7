#include "fdcr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fdcr {

namespace {

void throw_if_nonfinite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace

// ---- complex vector helpers ------------------------------------------------

cplx vdot(const CVec& a, const CVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vdot: size mismatch");
  cplx s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double vnorm2(const CVec& a) {
  double s = 0.0;
  for (const cplx& x : a) s += std::norm(x);
  return s;
}

double vnorm(const CVec& a) { return std::sqrt(vnorm2(a)); }

// ---- ComplexMatrix -----------------------------------------------------------

ComplexMatrix::ComplexMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, cplx(0.0, 0.0)) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("ComplexMatrix: negative dimension");
}

ComplexMatrix::ComplexMatrix(int rows, int cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("ComplexMatrix: negative dimension");
  if (data_.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("ComplexMatrix: data size mismatch");
  check_finite();
}

ComplexMatrix ComplexMatrix::identity(int n) {
  ComplexMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_columns(const std::vector<CVec>& cols) {
  if (cols.empty()) return {};
  const int r = static_cast<int>(cols[0].size());
  const int c = static_cast<int>(cols.size());
  ComplexMatrix m(r, c);
  for (int j = 0; j < c; ++j) {
    if (static_cast<int>(cols[j].size()) != r)
      throw std::invalid_argument("from_columns: ragged columns");
    for (int i = 0; i < r; ++i) m(i, j) = cols[j][i];
  }
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
  return m;
}

ComplexMatrix ComplexMatrix::operator*(const ComplexMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("matmul: inner dimension mismatch");
  ComplexMatrix m(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int k = 0; k < cols_; ++k) {
      const cplx aik = (*this)(i, k);
      if (aik == cplx(0.0, 0.0)) continue;
      for (int j = 0; j < rhs.cols_; ++j) m(i, j) += aik * rhs(k, j);
    }
  }
  return m;
}

CVec ComplexMatrix::operator*(const CVec& v) const {
  if (static_cast<int>(v.size()) != cols_) throw std::invalid_argument("matvec: size mismatch");
  CVec y(rows_, cplx(0.0, 0.0));
  for (int i = 0; i < rows_; ++i) {
    cplx s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
    y[i] = s;
  }
  return y;
}

CVec ComplexMatrix::column(int c) const {
  CVec v(rows_);
  for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, c);
  return v;
}

double ComplexMatrix::frob_norm() const {
  double s = 0.0;
  for (const cplx& x : data_) s += std::norm(x);
  return std::sqrt(s);
}

void ComplexMatrix::check_finite() const {
  for (const cplx& x : data_) {
    throw_if_nonfinite(x.real(), "ComplexMatrix");
    throw_if_nonfinite(x.imag(), "ComplexMatrix");
  }
}

// ---- SymMatrix ---------------------------------------------------------------

SymMatrix SymMatrix::identity(int n) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

double SymMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += at(i, i);
  return s;
}

double SymMatrix::frob_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

// ---- HermitianMatrix ----------------------------------------------------------

HermitianMatrix::HermitianMatrix(int dim)
    : n_(dim), a_(static_cast<size_t>(dim) * dim, cplx(0.0, 0.0)) {
  if (dim < 0) throw std::invalid_argument("HermitianMatrix: negative dimension");
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  HermitianMatrix h(dim);
  for (int i = 0; i < dim; ++i) h.a_[static_cast<size_t>(i) * dim + i] = 1.0;
  return h;
}

HermitianMatrix HermitianMatrix::outer(const CVec& v) {
  const int n = static_cast<int>(v.size());
  HermitianMatrix h(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h.a_[static_cast<size_t>(i) * n + j] = v[i] * std::conj(v[j]);
  for (int i = 0; i < n; ++i)
    h.a_[static_cast<size_t>(i) * n + i] = cplx(std::norm(v[i]), 0.0);
  return h;
}

HermitianMatrix HermitianMatrix::from_matrix(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("from_matrix: not square");
  const int n = m.rows();
  double asym2 = 0.0, scale2 = 0.0;
  HermitianMatrix h(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const cplx d = m(i, j) - std::conj(m(j, i));
      asym2 += std::norm(d);
      scale2 += std::norm(m(i, j));
      h.a_[static_cast<size_t>(i) * n + j] = 0.5 * (m(i, j) + std::conj(m(j, i)));
    }
    h.a_[static_cast<size_t>(i) * n + i] = cplx(m(i, i).real(), 0.0);
  }
  if (std::sqrt(asym2) > tol * std::max(1.0, std::sqrt(scale2)))
    throw std::invalid_argument("from_matrix: input is not numerically Hermitian");
  return h;
}

void HermitianMatrix::set(int r, int c, cplx v) {
  if (r == c) {
    a_[static_cast<size_t>(r) * n_ + c] = cplx(v.real(), 0.0);
  } else {
    a_[static_cast<size_t>(r) * n_ + c] = v;
    a_[static_cast<size_t>(c) * n_ + r] = std::conj(v);
  }
}

void HermitianMatrix::add(int r, int c, cplx v) {
  set(r, c, (*this)(r, c) + v);
}

double HermitianMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)(i, i).real();
  return s;
}

double HermitianMatrix::frob_norm() const {
  double s = 0.0;
  for (const cplx& x : a_) s += std::norm(x);
  return std::sqrt(s);
}

void HermitianMatrix::scale(double s) {
  for (cplx& x : a_) x *= s;
}

void HermitianMatrix::add_scaled(const HermitianMatrix& h, double s) {
  if (h.n_ != n_) throw std::invalid_argument("add_scaled: dimension mismatch");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += s * h.a_[i];
}

CVec HermitianMatrix::operator*(const CVec& v) const {
  if (static_cast<int>(v.size()) != n_) throw std::invalid_argument("matvec: size mismatch");
  CVec y(n_, cplx(0.0, 0.0));
  for (int i = 0; i < n_; ++i) {
    cplx s = 0.0;
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
    y[i] = s;
  }
  return y;
}

ComplexMatrix HermitianMatrix::to_matrix() const {
  ComplexMatrix m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double HermitianMatrix::quad_form(const CVec& x) const {
  const CVec hx = (*this) * x;
  return vdot(x, hx).real();
}

void HermitianMatrix::check_finite() const {
  for (const cplx& x : a_) {
    throw_if_nonfinite(x.real(), "HermitianMatrix");
    throw_if_nonfinite(x.imag(), "HermitianMatrix");
  }
}

// ---- Jacobi eigensolver --------------------------------------------------------

bool sym_jacobi_eig(int n, double* a, double* evals, double* evecs, int max_sweeps) {
  auto A = [&](int r, int c) -> double& { return a[static_cast<size_t>(r) * n + c]; };
  auto V = [&](int r, int c) -> double& { return evecs[static_cast<size_t>(r) * n + c]; };

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) V(i, j) = (i == j) ? 1.0 : 0.0;

  double frob2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) frob2 += A(i, j) * A(i, j);
  const double stop = 1e-15 * std::max(std::sqrt(frob2), 1e-300);

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off2 = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off2 += 2.0 * A(p, q) * A(p, q);
    if (std::sqrt(off2) <= stop) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;  // avoids theta^2 overflow; limit of the exact formula
        } else {
          t = ((theta >= 0.0) ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = A(p, p), aqq = A(q, q);
        A(p, p) = app - t * apq;
        A(q, q) = aqq + t * apq;
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(p, k) = A(k, p);
          A(k, q) = s * akp + c * akq;
          A(q, k) = A(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) return false;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return A(i, i) < A(j, j); });

  std::vector<double> tmp_vals(n);
  std::vector<double> tmp_vecs(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    tmp_vals[j] = A(order[j], order[j]);
    for (int i = 0; i < n; ++i) tmp_vecs[static_cast<size_t>(i) * n + j] = V(i, order[j]);
  }
  std::copy(tmp_vals.begin(), tmp_vals.end(), evals);
  std::copy(tmp_vecs.begin(), tmp_vecs.end(), evecs);
  return true;
}

SymEig sym_eig(const SymMatrix& a) {
  const int n = a.dim();
  SymMatrix work = a;
  SymEig out;
  out.values.resize(n);
  out.vectors = SymMatrix(n);
  if (!sym_jacobi_eig(n, work.data(), out.values.data(), out.vectors.data()))
    throw std::runtime_error("sym_eig: Jacobi iteration did not converge");
  return out;
}

// ---- Hermitian eigendecomposition via real embedding -----------------------------

SymMatrix real_embed(const HermitianMatrix& h) {
  const int n = h.dim();
  SymMatrix e(2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const cplx v = h(i, j);
      e.at(i, j) = v.real();
      e.at(n + i, n + j) = v.real();
      e.at(i, n + j) = -v.imag();
      e.at(n + i, j) = v.imag();
    }
  }
  return e;
}

EigResult hermitian_eig(const HermitianMatrix& h) {
  const int n = h.dim();
  EigResult out;
  if (n == 0) return out;

  const SymEig se = sym_eig(real_embed(h));

  // Each real eigenpair duplicates: if (a; b) is an eigenvector then so is
  // (-b; a), and both complexify to the same direction a + ib up to phase.
  // Walk ascending and keep the n complex-independent directions.
  std::vector<CVec> kept;
  std::vector<double> vals;
  kept.reserve(n);
  const double tau_sel = 1e-4;
  for (int j = 0; j < 2 * n && static_cast<int>(kept.size()) < n; ++j) {
    CVec z(n);
    for (int i = 0; i < n; ++i)
      z[i] = cplx(se.vectors.at(i, j), se.vectors.at(n + i, j));
    for (const CVec& u : kept) {
      const cplx c = vdot(u, z);
      for (int i = 0; i < n; ++i) z[i] -= c * u[i];
    }
    const double r = vnorm(z);
    if (r <= tau_sel) continue;
    for (cplx& x : z) x /= r;
    // deterministic phase: largest-magnitude entry real positive
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(z[i]) > std::abs(z[imax])) imax = i;
    const double mag = std::abs(z[imax]);
    if (mag > 0.0) {
      const cplx ph = std::conj(z[imax]) / mag;
      for (cplx& x : z) x *= ph;
    }
    kept.push_back(std::move(z));
    vals.push_back(se.values[j]);
  }
  if (static_cast<int>(kept.size()) != n)
    throw std::runtime_error("hermitian_eig: embedding produced fewer independent eigenvectors than expected");

  out.values = std::move(vals);
  out.vectors = ComplexMatrix::from_columns(kept);
  return out;
}

bool is_psd(const HermitianMatrix& h, double tol) {
  if (h.dim() == 0) return true;
  const EigResult e = hermitian_eig(h);
  return e.values.front() >= -tol * std::max(1.0, h.frob_norm());
}

// ---- Cholesky ---------------------------------------------------------------------

bool cholesky_in_place(int n, double* a, double shift) {
  auto A = [&](int r, int c) -> double& { return a[static_cast<size_t>(r) * n + c]; };
  for (int j = 0; j < n; ++j) {
    double d = A(j, j) + shift;
    for (int k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    A(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = A(i, j) + ((i == j) ? shift : 0.0);
      for (int k = 0; k < j; ++k) s -= A(i, k) * A(j, k);
      A(i, j) = s / ljj;
    }
  }
  return true;
}

void cholesky_solve(int n, const double* l, double* b) {
  auto L = [&](int r, int c) -> double { return l[static_cast<size_t>(r) * n + c]; };
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= L(i, k) * b[k];
    b[i] = s / L(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= L(k, i) * b[k];
    b[i] = s / L(i, i);
  }
}

// ---- complex HPD solve ----------------------------------------------------------

ComplexMatrix solve_hpd(const HermitianMatrix& a, const ComplexMatrix& b) {
  const int n = a.dim();
  if (b.rows() != n) throw std::invalid_argument("solve_hpd: dimension mismatch");

  // complex Cholesky A = L L^H, lower triangular L
  ComplexMatrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (int k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0)) throw std::runtime_error("solve_hpd: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      cplx s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }

  ComplexMatrix x = b;
  for (int c = 0; c < b.cols(); ++c) {
    for (int i = 0; i < n; ++i) {
      cplx s = x(i, c);
      for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      cplx s = x(i, c);
      for (int k = i + 1; k < n; ++k) s -= std::conj(l(k, i)) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

CVec solve_hpd(const HermitianMatrix& a, const CVec& b) {
  ComplexMatrix rhs(static_cast<int>(b.size()), 1);
  for (size_t i = 0; i < b.size(); ++i) rhs(static_cast<int>(i), 0) = b[i];
  const ComplexMatrix x = solve_hpd(a, rhs);
  return x.column(0);
}

}  // namespace fdcr
