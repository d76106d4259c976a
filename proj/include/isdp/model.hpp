#pragma once

// Data model for binary QCQPs, their lifted binary-SDP reformulation, and
// general integer SDPs.
//
// Conventions, fixed across the whole project:
//   BqcqpInstance   min/max  x^T C x + 2 d0^T x
//                   s.t.     x^T A_i x + 2 d_i^T x  {<=,=}  b_i
//                            D x = t,  x in {0,1}^n
//   BsdpInstance    min/max  <C,X> + 2 d0^T x
//                   s.t.     <A_i,X> + d_i^T x  {<=,=}  b_i
//                            D x = t, Diag(X) = x, X - xx^T psd, x in {0,1}^n
// Both store C, d0 already negated when the original sense is max, with the
// original sense kept for reporting. The BQCQP->BSDP conversion doubles the
// constraint linear coefficients so the two formulations describe the same
// feasible set at binary points.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isdp/linalg.hpp"

namespace isdp {

enum class Sense { Min, Max };
enum class Relation { LessEqual, Equal };

struct QuadConstraint {
  SymMatrix A;
  std::vector<double> d;
  double b = 0.0;
  Relation rel = Relation::LessEqual;
};

/// Dense q x n row-major matrix for the linear system D x = t.
struct LinearSystem {
  int rows = 0, cols = 0;
  std::vector<double> a;  // row-major
  std::vector<double> t;

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  void resize(int r, int c) {
    rows = r;
    cols = c;
    a.assign(static_cast<std::size_t>(r) * c, 0.0);
    t.assign(r, 0.0);
  }
};

struct BqcqpInstance {
  int n = 0;
  SymMatrix C;              // minimization form
  std::vector<double> d0;   // minimization form
  std::vector<QuadConstraint> constraints;
  LinearSystem lin;         // D x = t
  Sense sense = Sense::Min; // original sense, for reporting

  double sign() const { return sense == Sense::Min ? 1.0 : -1.0; }
  /// objective in the user's orientation
  double user_objective(const std::vector<double>& x) const {
    double v = C.quad_form(x);
    for (int i = 0; i < n; ++i) v += 2.0 * d0[i] * x[i];
    return sign() * v;
  }
  bool feasible(const std::vector<double>& x, double tol = 1e-9) const {
    for (const auto& c : constraints) {
      double lhs = c.A.quad_form(x);
      for (int i = 0; i < n; ++i) lhs += 2.0 * c.d[i] * x[i];
      if (c.rel == Relation::Equal ? std::abs(lhs - c.b) > tol : lhs > c.b + tol) return false;
    }
    for (int r = 0; r < lin.rows; ++r) {
      double lhs = 0;
      for (int j = 0; j < n; ++j) lhs += lin(r, j) * x[j];
      if (std::abs(lhs - lin.t[r]) > tol) return false;
    }
    return true;
  }
};

struct BsdpInstance {
  int n = 0;
  SymMatrix C;
  std::vector<double> d0;
  std::vector<QuadConstraint> constraints;  // <A_i,X> + d_i^T x {<=,=} b_i
  LinearSystem lin;
  Sense sense = Sense::Min;

  double sign() const { return sense == Sense::Min ? 1.0 : -1.0; }
  /// minimization-form objective at a binary point (X = xx^T forced)
  double min_objective_at(const std::vector<double>& x) const {
    double v = C.quad_form(x);
    for (int i = 0; i < n; ++i) v += 2.0 * d0[i] * x[i];
    return v;
  }
  bool point_feasible(const std::vector<double>& x, double tol = 1e-9) const {
    for (const auto& c : constraints) {
      double lhs = c.A.quad_form(x);  // <A, xx^T>
      for (int i = 0; i < n; ++i) lhs += c.d[i] * x[i];
      if (c.rel == Relation::Equal ? std::abs(lhs - c.b) > tol : lhs > c.b + tol) return false;
    }
    for (int r = 0; r < lin.rows; ++r) {
      double lhs = 0;
      for (int j = 0; j < n; ++j) lhs += lin(r, j) * x[j];
      if (std::abs(lhs - lin.t[r]) > tol) return false;
    }
    return true;
  }
};

struct IntegerEntry {
  int i = 0, j = 0;  // upper triangle, i <= j
  double lo = 0.0, hi = 0.0;
};

struct IsdpInstance {
  int n = 0;
  SymMatrix C;
  std::vector<std::pair<SymMatrix, double>> equalities;  // <A_i,X> = b_i
  std::vector<IntegerEntry> integer_entries;
  Sense sense = Sense::Min;

  double sign() const { return sense == Sense::Min ? 1.0 : -1.0; }
};

/// Exact lifted reformulation: coefficient data carried over, constraint
/// linear terms doubled so that <A_i,X> + d_i^T x at X = xx^T equals
/// x^T A_i x + 2 d_i^T x.
inline BsdpInstance bqcqp_to_bsdp(const BqcqpInstance& p) {
  BsdpInstance b;
  b.n = p.n;
  b.C = p.C;
  b.d0 = p.d0;
  b.lin = p.lin;
  b.sense = p.sense;
  b.constraints.reserve(p.constraints.size());
  for (const auto& c : p.constraints) {
    QuadConstraint q = c;
    for (double& v : q.d) v *= 2.0;
    b.constraints.push_back(std::move(q));
  }
  return b;
}

/// The (n+1) x (n+1) block matrix [[X, x],[x^T, 1]].
struct LiftedMatrix {
  SymMatrix M;

  int inner_dim() const { return M.dim() - 1; }
};

inline LiftedMatrix lift(const SymMatrix& x_mat, const std::vector<double>& x) {
  const int n = x_mat.dim();
  if (static_cast<int>(x.size()) != n) throw std::invalid_argument("lift: dimension mismatch");
  LiftedMatrix l{SymMatrix(n + 1)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) l.M.set(i, j, x_mat(i, j));
  for (int i = 0; i < n; ++i) l.M.set(n, i, x[i]);
  l.M.set(n, n, 1.0);
  return l;
}

inline std::pair<SymMatrix, std::vector<double>> unlift(const LiftedMatrix& l) {
  const int n = l.inner_dim();
  if (std::abs(l.M(n, n) - 1.0) > 1e-9)
    throw std::invalid_argument("unlift: corner entry differs from 1 beyond tolerance");
  SymMatrix x_mat(n);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    x[i] = l.M(n, i);
    for (int j = 0; j <= i; ++j) x_mat.set(i, j, l.M(i, j));
  }
  return {std::move(x_mat), std::move(x)};
}

}  // namespace isdp
