#pragma once

// Dense symmetric linear algebra: packed symmetric storage, a cyclic Jacobi
// eigensolver, commutators, PSD tests and simultaneous diagonalization.
// Everything here is deterministic: fixed sweep order, fixed sign convention,
// no randomized pivoting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace isdp {

/// Thrown when two matrices fail the pairwise-commutation precondition of
/// simultaneous_diagonalizer.
class SimdiagError : public std::runtime_error {
 public:
  explicit SimdiagError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline std::size_t packed_index(int n, int i, int j) {
  // lower triangle, column-major: (i,j) with i >= j
  if (i < j) std::swap(i, j);
  return static_cast<std::size_t>(j) * n - static_cast<std::size_t>(j) * (j + 1) / 2 +
         static_cast<std::size_t>(i);
}
}  // namespace detail

/// Dense real symmetric n x n matrix, packed lower triangle.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {
    if (n < 0) throw std::invalid_argument("SymMatrix: negative dimension");
  }

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
  }
  static SymMatrix diag(const std::vector<double>& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m.set(i, i, d[i]);
    return m;
  }
  /// Rank-one matrix v v^T.
  static SymMatrix outer(const std::vector<double>& v) {
    SymMatrix m(static_cast<int>(v.size()));
    for (int i = 0; i < m.dim(); ++i)
      for (int j = 0; j <= i; ++j) m.set(i, j, v[i] * v[j]);
    return m;
  }

  int dim() const { return n_; }

  double operator()(int i, int j) const { return a_[detail::packed_index(n_, i, j)]; }
  void set(int i, int j, double v) { a_[detail::packed_index(n_, i, j)] = v; }
  void add(int i, int j, double v) { a_[detail::packed_index(n_, i, j)] += v; }

  const std::vector<double>& packed() const { return a_; }
  std::vector<double>& packed() { return a_; }

  double trace() const {
    double t = 0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0;
    for (int i = 0; i < n_; ++i) {
      s += (*this)(i, i) * (*this)(i, i);
      for (int j = 0; j < i; ++j) s += 2.0 * (*this)(i, j) * (*this)(i, j);
    }
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  SymMatrix& operator+=(const SymMatrix& o) {
    check_same_dim(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    check_same_dim(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  SymMatrix& operator*=(double t) {
    for (double& v : a_) v *= t;
    return *this;
  }
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double t, SymMatrix a) { return a *= t; }

  /// y = A x
  std::vector<double> matvec(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(n_, 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  double quad_form(const std::vector<double>& x) const {
    double s = 0;
    for (int i = 0; i < n_; ++i) {
      s += (*this)(i, i) * x[i] * x[i];
      for (int j = 0; j < i; ++j) s += 2.0 * (*this)(i, j) * x[i] * x[j];
    }
    return s;
  }

 private:
  void check_same_dim(const SymMatrix& o) const {
    if (o.n_ != n_) throw std::invalid_argument("SymMatrix: dimension mismatch");
  }
  int n_ = 0;
  std::vector<double> a_;
};

/// Frobenius inner product <A,B> = tr(AB).
inline double inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
  double s = 0;
  for (int i = 0; i < a.dim(); ++i) {
    s += a(i, i) * b(i, i);
    for (int j = 0; j < i; ++j) s += 2.0 * a(i, j) * b(i, j);
  }
  return s;
}

/// Small dense column-major matrix; used for eigenvector bases.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(j) * r_ + i]; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(j) * r_ + i]; }

  std::vector<double> col(int j) const {
    std::vector<double> v(r_);
    for (int i = 0; i < r_; ++i) v[i] = (*this)(i, j);
    return v;
  }

 private:
  int r_ = 0, c_ = 0;
  std::vector<double> a_;
};

struct EigenDecomposition {
  std::vector<double> values;  // sorted non-increasing
  Matrix vectors;              // orthonormal columns, vectors.col(k) pairs with values[k]
};

namespace detail {

// Cyclic Jacobi sweeps on a full dense copy. Deterministic for identical
// input; rotations applied in fixed (p,q) order.
inline void jacobi_eigen(int n, std::vector<double>& w /*row-major n*n, destroyed*/,
                         Matrix& v_out, std::vector<double>& lam_out) {
  Matrix v = Matrix::identity(n);
  auto W = [&](int i, int j) -> double& { return w[static_cast<std::size_t>(i) * n + j]; };

  double fro = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fro += W(i, j) * W(i, j);
  fro = std::sqrt(fro);
  const double stop = 1e-14 * std::max(1.0, fro);

  const int max_sweeps = 50;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += W(p, q) * W(p, q);
    off = std::sqrt(2.0 * off);
    if (off <= stop) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = W(p, q);
        if (std::abs(apq) <= 1e-18 * std::max(1.0, fro)) continue;
        const double app = W(p, p), aqq = W(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        double t;
        if (tau >= 0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double wkp = W(k, p), wkq = W(k, q);
          W(k, p) = c * wkp - s * wkq;
          W(k, q) = s * wkp + c * wkq;
        }
        for (int k = 0; k < n; ++k) {
          const double wpk = W(p, k), wqk = W(q, k);
          W(p, k) = c * wpk - s * wqk;
          W(q, k) = s * wpk + c * wqk;
        }
        W(p, q) = 0.0;
        W(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  lam_out.resize(n);
  for (int i = 0; i < n; ++i) lam_out[i] = W(i, i);
  v_out = std::move(v);
}

inline void sort_and_fix_signs(std::vector<double>& lam, Matrix& v) {
  const int n = static_cast<int>(lam.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return lam[a] > lam[b]; });

  std::vector<double> lam2(n);
  Matrix v2(v.rows(), n);
  for (int k = 0; k < n; ++k) {
    lam2[k] = lam[perm[k]];
    for (int i = 0; i < v.rows(); ++i) v2(i, k) = v(i, perm[k]);
  }
  // sign convention: first entry with |.| > 1e-12 is positive
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < v2.rows(); ++i) {
      if (std::abs(v2(i, k)) > 1e-12) {
        if (v2(i, k) < 0)
          for (int r = 0; r < v2.rows(); ++r) v2(r, k) = -v2(r, k);
        break;
      }
    }
  }
  lam = std::move(lam2);
  v = std::move(v2);
}

}  // namespace detail

inline EigenDecomposition sym_eigen(const SymMatrix& a) {
  if (!a.all_finite()) throw std::invalid_argument("sym_eigen: non-finite input");
  const int n = a.dim();
  std::vector<double> w(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(i) * n + j] = a(i, j);

  EigenDecomposition e;
  detail::jacobi_eigen(n, w, e.vectors, e.values);
  detail::sort_and_fix_signs(e.values, e.vectors);
  return e;
}

/// Smallest eigenvalue and a unit eigenvector for it.
inline std::pair<double, std::vector<double>> min_eig(const SymMatrix& a) {
  EigenDecomposition e = sym_eigen(a);
  const int n = a.dim();
  return {e.values[n - 1], e.vectors.col(n - 1)};
}

/// ||AB - BA||_F; zero iff A and B are simultaneously diagonalizable.
inline double commutator_norm(const SymMatrix& a, const SymMatrix& b) {
  const int n = a.dim();
  if (b.dim() != n) throw std::invalid_argument("commutator_norm: dimension mismatch");
  double s = 0;
  // the commutator is antisymmetric, so accumulate the strict lower triangle
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      double cij = 0;
      for (int k = 0; k < n; ++k) cij += a(i, k) * b(k, j) - b(i, k) * a(k, j);
      s += 2.0 * cij * cij;
    }
  }
  return std::sqrt(s);
}

inline bool is_psd(const SymMatrix& a, double tol) {
  return min_eig(a).first >= -tol;
}

namespace detail {

// splitmix64-style counter mix; fixed stream for the mu draws below
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double max_offdiag_congruence(const SymMatrix& m, const Matrix& u) {
  // max_{i != j} |(U^T M U)_{ij}|
  const int n = m.dim();
  double worst = 0;
  std::vector<double> mu(n);
  for (int j = 0; j < n; ++j) {
    auto uj = u.col(j);
    mu = m.matvec(uj);
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      double v = 0;
      for (int k = 0; k < n; ++k) v += u(k, i) * mu[k];
      worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

}  // namespace detail

/// Orthogonal U with U^T C U and U^T B U diagonal, for commuting C, B.
/// Perturbation strategy: eigendecompose C + mu B for mu from a fixed
/// pseudorandom sequence until the spectrum is simple (5 draws), then fall
/// back to re-diagonalizing B inside each eigenspace of C.
inline Matrix simultaneous_diagonalizer(const SymMatrix& c, const SymMatrix& b, double tol) {
  const int n = c.dim();
  if (b.dim() != n) throw std::invalid_argument("simultaneous_diagonalizer: dimension mismatch");
  const double frc = c.frobenius_norm(), frb = b.frobenius_norm();
  const double comm = commutator_norm(c, b);
  if (comm > tol * std::max(1.0, frc * frb))
    throw SimdiagError("matrices do not commute within tolerance (||[C,B]||_F = " +
                       std::to_string(comm) + ")");

  const double resid_scale_c = std::max(1.0, frc);
  const double resid_scale_b = std::max(1.0, frb);

  auto accept = [&](const Matrix& u) {
    return detail::max_offdiag_congruence(c, u) <= tol * resid_scale_c &&
           detail::max_offdiag_congruence(b, u) <= tol * resid_scale_b;
  };

  const double ratio = (frb > 1e-300) ? (std::max(1.0, frc) / frb) : 0.0;
  for (int draw = 0; draw < 5 && ratio > 0; ++draw) {
    const std::uint64_t bits = detail::mix64(0x5349'4D44'4941'47ULL + draw);
    const double u01 = static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
    const double mu = ratio * (0.25 + u01);

    SymMatrix m = c;
    SymMatrix bm = b;
    bm *= mu;
    m += bm;
    EigenDecomposition e = sym_eigen(m);
    const double scale = std::max(1.0, m.frobenius_norm());
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i) min_gap = std::min(min_gap, e.values[i] - e.values[i + 1]);
    if (n > 1 && min_gap <= 1e-9 * scale) continue;
    if (accept(e.vectors)) return e.vectors;
  }

  // fallback: refine within eigenspaces of C
  EigenDecomposition ec = sym_eigen(c);
  Matrix u = ec.vectors;
  const double cluster_tol = 1e-7 * std::max(1.0, frc);
  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n && std::abs(ec.values[end - 1] - ec.values[end]) <= cluster_tol) ++end;
    const int k = end - start;
    if (k > 1) {
      // project B into the eigenspace and diagonalize the small block
      SymMatrix bs(k);
      std::vector<std::vector<double>> bu(k);
      for (int j = 0; j < k; ++j) bu[j] = b.matvec(u.col(start + j));
      for (int i = 0; i < k; ++i)
        for (int j = 0; j <= i; ++j) {
          double v = 0;
          for (int r = 0; r < n; ++r) v += u(r, start + i) * bu[j][r];
          bs.set(i, j, v);
        }
      EigenDecomposition eb = sym_eigen(bs);
      Matrix fresh(n, k);
      for (int j = 0; j < k; ++j)
        for (int r = 0; r < n; ++r) {
          double v = 0;
          for (int i = 0; i < k; ++i) v += u(r, start + i) * eb.vectors(i, j);
          fresh(r, j) = v;
        }
      for (int j = 0; j < k; ++j)
        for (int r = 0; r < n; ++r) u(r, start + j) = fresh(r, j);
    }
    start = end;
  }
  // re-apply the sign convention after the block refinement
  for (int kcol = 0; kcol < n; ++kcol) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(u(i, kcol)) > 1e-12) {
        if (u(i, kcol) < 0)
          for (int r = 0; r < n; ++r) u(r, kcol) = -u(r, kcol);
        break;
      }
    }
  }
  if (!accept(u))
    throw SimdiagError("simultaneous diagonalization failed to reach the requested tolerance");
  return u;
}

}  // namespace isdp
