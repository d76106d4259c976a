#pragma once

// Cut families for the outer-approximation masters: initial polyhedral seeds,
// spectral SOC seeds from a commuting aggregation of the constraint matrices,
// dual-certificate cuts and their linear / second-order disaggregations, and
// rotated-cone cuts built from a pivot row of the lifted matrix.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "isdp/linalg.hpp"
#include "isdp/model.hpp"

namespace isdp {

/// <M, T> >= 0 over the lifted (or plain, for general ISDPs) matrix; T psd
/// and normalized to unit Frobenius norm.
struct LinearCut {
  SymMatrix T;
};

/// v^T X v >= (v^T x)^2 with a unit vector v; rotated-cone representable.
struct SocCut {
  std::vector<double> v;
};

/// (M_ii, wbar^T Mbar wbar, sqrt(2) wbar^T u) in V^3 for a pivot row i of the
/// lifted matrix, where Mbar drops row/column i and u is column i without the
/// pivot entry.
struct KkCut {
  int pivot = 0;
  std::vector<double> w;  // full lifted dimension
};

/// Plain linear row over (X entries, x): sum coef_x . x + sum coef_X . X >= rhs.
/// Carries no-good and Farkas feasibility cuts.
struct RowCut {
  std::vector<std::pair<int, double>> coef_x;
  std::vector<std::pair<std::pair<int, int>, double>> coef_X;  // (i,j) i>=j, coefficient on X_ij
  double rhs = 0.0;
};

class CutValidityError : public std::runtime_error {
 public:
  explicit CutValidityError(const std::string& m) : std::runtime_error(m) {}
};

/// The seeds (e_i +- e_j)(e_i +- e_j)^T in a given ambient dimension,
/// deduplicated and normalized: dim + dim(dim-1) = dim^2 cuts.
inline std::vector<LinearCut> pairwise_psd_seeds(int dim) {
  if (dim < 1) throw std::invalid_argument("pairwise_psd_seeds: dim >= 1");
  std::vector<LinearCut> cuts;
  cuts.reserve(static_cast<std::size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i) {
    SymMatrix t(dim);
    t.set(i, i, 1.0);
    cuts.push_back({std::move(t)});
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      for (double sgn : {1.0, -1.0}) {
        SymMatrix t(dim);
        t.set(i, i, 0.5);
        t.set(j, j, 0.5);
        t.set(i, j, 0.5 * sgn);
        cuts.push_back({std::move(t)});
      }
  return cuts;
}

/// Initial cut set of the pure outer approximation over the lifted matrix;
/// count (n+1)^2.
inline std::vector<LinearCut> initial_polyhedral(int n) {
  if (n < 1) throw std::invalid_argument("initial_polyhedral: n >= 1");
  return pairwise_psd_seeds(n + 1);
}

class AggregationError : public std::runtime_error {
 public:
  explicit AggregationError(const std::string& m) : std::runtime_error(m) {}
};

/// For a BSDP the diagonal linking rows X_ii = x_i aggregate to the identity
/// with all-ones weights; their support is structurally disjoint from the
/// quadratic constraint matrices.
inline std::vector<double> identity_aggregation(const BsdpInstance& b) {
  return std::vector<double>(b.n, 1.0);
}

/// General ISDP: least-squares weights with sum q_i A_i = I, exact identity
/// membership short-circuited. Throws when no aggregation reproduces I.
inline std::vector<double> identity_aggregation(const IsdpInstance& p) {
  const int r = static_cast<int>(p.equalities.size());
  const int n = p.n;
  for (int k = 0; k < r; ++k) {
    SymMatrix diff = p.equalities[k].first;
    diff -= SymMatrix::identity(n);
    if (diff.frobenius_norm() <= 1e-12) {
      std::vector<double> q(r, 0.0);
      q[k] = 1.0;
      return q;
    }
  }
  if (r == 0) throw AggregationError("no constraint matrices to aggregate");
  // minimum-norm least squares via the Gram system
  SymMatrix gram(r);
  std::vector<double> rhs(r);
  for (int i = 0; i < r; ++i) {
    rhs[i] = p.equalities[i].first.trace();
    for (int j = 0; j <= i; ++j)
      gram.set(i, j, inner(p.equalities[i].first, p.equalities[j].first));
  }
  EigenDecomposition eg = sym_eigen(gram);
  std::vector<double> q(r, 0.0);
  const double lam_tol = 1e-12 * std::max(1.0, eg.values.empty() ? 0.0 : eg.values[0]);
  for (int k = 0; k < r; ++k) {
    if (eg.values[k] <= lam_tol) continue;
    auto v = eg.vectors.col(k);
    double proj = 0;
    for (int i = 0; i < r; ++i) proj += v[i] * rhs[i];
    for (int i = 0; i < r; ++i) q[i] += proj / eg.values[k] * v[i];
  }
  SymMatrix agg(n);
  for (int i = 0; i < r; ++i) {
    SymMatrix a = p.equalities[i].first;
    a *= q[i];
    agg += a;
  }
  agg -= SymMatrix::identity(n);
  if (agg.frobenius_norm() > 1e-8 * std::sqrt(static_cast<double>(n)))
    throw AggregationError("no aggregation of the constraint matrices equals the identity");
  return q;
}

/// Weights over the quadratic constraint matrices making the aggregation
/// commute with C. Among the commutation system's null space, picks the
/// direction maximizing ||sum y_i A_i||_F via the null-space Gram matrix's top
/// eigenvector, scaled to ||y||_inf = 1; zero when only the trivial solution
/// exists.
inline std::vector<double> commuting_aggregation(const SymMatrix& c,
                                                 const std::vector<SymMatrix>& constraint_mats) {
  const int r = static_cast<int>(constraint_mats.size());
  std::vector<double> q(r, 0.0);
  if (r == 0) return q;
  const int n = c.dim();

  // columns of the commutation operator: strict lower triangle of [C, A_i]
  std::vector<std::vector<double>> cols(r);
  for (int k = 0; k < r; ++k) {
    const SymMatrix& a = constraint_mats[k];
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        double v = 0;
        for (int l = 0; l < n; ++l) v += c(i, l) * a(l, j) - a(i, l) * c(l, j);
        col.push_back(v);
      }
    cols[k] = std::move(col);
  }
  SymMatrix ktk(r);
  double kmax = 0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = 0;
      for (std::size_t l = 0; l < cols[i].size(); ++l) v += cols[i][l] * cols[j][l];
      ktk.set(i, j, v);
      kmax = std::max(kmax, std::abs(v));
    }
  EigenDecomposition ek = sym_eigen(ktk);
  const double null_tol = 1e-10 * std::max(1.0, kmax);
  std::vector<int> null_idx;
  for (int k = 0; k < r; ++k)
    if (ek.values[k] <= null_tol) null_idx.push_back(k);
  if (null_idx.empty()) return q;

  const int d = static_cast<int>(null_idx.size());
  // Gram of the aggregations spanned by the null basis
  std::vector<SymMatrix> basis_aggs;
  basis_aggs.reserve(d);
  for (int bn : null_idx) {
    auto u = ek.vectors.col(bn);
    SymMatrix agg(n);
    for (int k = 0; k < r; ++k) {
      SymMatrix a = constraint_mats[k];
      a *= u[k];
      agg += a;
    }
    basis_aggs.push_back(std::move(agg));
  }
  SymMatrix gram(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) gram.set(i, j, inner(basis_aggs[i], basis_aggs[j]));
  EigenDecomposition eg = sym_eigen(gram);
  if (eg.values[0] <= 1e-12 * std::max(1.0, c.frobenius_norm())) return q;  // all aggregations vanish
  auto alpha = eg.vectors.col(0);
  for (int i = 0; i < d; ++i) {
    auto u = ek.vectors.col(null_idx[i]);
    for (int k = 0; k < r; ++k) q[k] += alpha[i] * u[k];
  }
  double qmax = 0;
  for (double v : q) qmax = std::max(qmax, std::abs(v));
  if (qmax <= 1e-14) return std::vector<double>(r, 0.0);
  for (double& v : q) v /= qmax;
  return q;
}

inline std::vector<double> commuting_aggregation(const BsdpInstance& b) {
  std::vector<SymMatrix> mats;
  mats.reserve(b.constraints.size());
  for (const auto& c : b.constraints) mats.push_back(c.A);
  return commuting_aggregation(b.C, mats);
}

/// Columns of the simultaneous diagonalizer of (C, A(q2)) as SOC seed cuts.
inline std::vector<SocCut> spectral_seed(const BsdpInstance& b, double tol = 1e-7) {
  std::vector<double> q2 = commuting_aggregation(b);
  SymMatrix agg(b.n);
  for (std::size_t k = 0; k < b.constraints.size(); ++k) {
    SymMatrix a = b.constraints[k].A;
    a *= q2[k];
    agg += a;
  }
  Matrix u = simultaneous_diagonalizer(b.C, agg, tol);
  std::vector<SocCut> seeds;
  seeds.reserve(b.n);
  for (int j = 0; j < b.n; ++j) seeds.push_back({u.col(j)});
  return seeds;
}

/// Rank-one linear cuts v_j v_j^T for each eigenvalue above lam_tol * lam_max.
inline std::vector<LinearCut> disaggregate_linear(const SymMatrix& s_cert, double lam_tol = 1e-8) {
  EigenDecomposition e = sym_eigen(s_cert);
  std::vector<LinearCut> cuts;
  const double lam_max = e.values.empty() ? 0.0 : std::max(e.values[0], 0.0);
  for (int k = 0; k < s_cert.dim(); ++k) {
    if (e.values[k] <= lam_tol * lam_max || e.values[k] <= 0) continue;
    cuts.push_back({SymMatrix::outer(e.vectors.col(k))});
  }
  return cuts;
}

/// SOC cuts w_j^T X w_j >= (w_j^T x)^2 from the first n coordinates of each
/// retained eigenvector of the lifted certificate; jointly they imply the
/// aggregate cut <lift(X,x), S> >= 0.
inline std::vector<SocCut> disaggregate_soc(const SymMatrix& s_cert, double lam_tol = 1e-8) {
  const int dim = s_cert.dim();
  const int n = dim - 1;
  EigenDecomposition e = sym_eigen(s_cert);
  std::vector<SocCut> cuts;
  const double lam_max = e.values.empty() ? 0.0 : std::max(e.values[0], 0.0);
  for (int k = 0; k < dim; ++k) {
    if (e.values[k] <= lam_tol * lam_max || e.values[k] <= 0) continue;
    auto v = e.vectors.col(k);
    double wn = 0;
    for (int i = 0; i < n; ++i) wn += v[i] * v[i];
    wn = std::sqrt(wn);
    if (wn <= 1e-10) continue;  // corner-only eigenvector: the cut reads 1 >= 0
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = v[i] / wn;
    cuts.push_back({std::move(w)});
  }
  return cuts;
}

enum class KkMode { Pairs, Certificate };

/// Pairs mode: w = e_i +- e_j over all lifted pairs i > j, equivalent to the
/// 2x2-minor rotated-cone constraints. Certificate mode: one cut per retained
/// eigenvector of S, pivoting on its largest absolute entry.
inline std::vector<KkCut> kk_cuts(int lifted_dim, KkMode mode,
                                  const SymMatrix* s_cert = nullptr, double lam_tol = 1e-8) {
  std::vector<KkCut> cuts;
  if (mode == KkMode::Pairs) {
    for (int i = 0; i < lifted_dim; ++i)
      for (int j = 0; j < i; ++j)
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> w(lifted_dim, 0.0);
          w[i] = 1.0;
          w[j] = sgn;
          cuts.push_back({i, std::move(w)});
        }
    return cuts;
  }
  if (s_cert == nullptr) throw std::invalid_argument("kk_cuts: certificate mode needs S");
  EigenDecomposition e = sym_eigen(*s_cert);
  const double lam_max = e.values.empty() ? 0.0 : std::max(e.values[0], 0.0);
  for (int k = 0; k < s_cert->dim(); ++k) {
    if (e.values[k] <= lam_tol * lam_max || e.values[k] <= 0) continue;
    auto v = e.vectors.col(k);
    int pivot = 0;
    for (int i = 1; i < s_cert->dim(); ++i)
      if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
    cuts.push_back({pivot, std::move(v)});
  }
  return cuts;
}

/// Evaluates the three rotated-cone slots (r, s, t) of a KkCut on a lifted
/// matrix: r = M_ii, s = wbar^T Mbar wbar, t = sqrt(2) wbar^T u.
inline std::array<double, 3> kk_slots(const KkCut& c, const SymMatrix& m) {
  const int dim = m.dim();
  const int piv = c.pivot;
  double r = m(piv, piv);
  double s = 0, t = 0;
  for (int i = 0; i < dim; ++i) {
    if (i == piv) continue;
    t += c.w[i] * m(i, piv);
    for (int j = 0; j < dim; ++j) {
      if (j == piv) continue;
      s += c.w[i] * m(i, j) * c.w[j];
    }
  }
  return {r, s, std::sqrt(2.0) * t};
}

/// Active cut sets for a master problem, with duplicate suppression.
class CutPool {
 public:
  explicit CutPool(double dup_tol = 1e-8, double psd_tol = 1e-9)
      : dup_tol_(dup_tol), psd_tol_(psd_tol) {}

  bool insert(LinearCut cut) {
    const double nrm = cut.T.frobenius_norm();
    if (nrm <= 1e-14) throw CutValidityError("linear cut with vanishing matrix");
    if (std::abs(nrm - 1.0) > 1e-9) cut.T *= 1.0 / nrm;
    if (min_eig(cut.T).first < -psd_tol_)
      throw CutValidityError("linear cut matrix is not positive semidefinite");
    for (const auto& old : linear_)
      if (inner(cut.T, old.T) > 1.0 - dup_tol_) return false;
    linear_.push_back(std::move(cut));
    return true;
  }

  bool insert(SocCut cut) {
    double nrm = 0;
    for (double v : cut.v) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm <= 1e-14) throw CutValidityError("soc cut with vanishing vector");
    for (double& v : cut.v) v /= nrm;
    for (const auto& old : soc_) {
      double dot = 0;
      for (std::size_t i = 0; i < cut.v.size(); ++i) dot += cut.v[i] * old.v[i];
      if (std::abs(dot) > 1.0 - dup_tol_) return false;  // the cut depends on v only through +-v
    }
    soc_.push_back(std::move(cut));
    return true;
  }

  bool insert(KkCut cut) {
    double nrm = 0;
    for (double v : cut.w) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm <= 1e-14) throw CutValidityError("kk cut with vanishing vector");
    for (double& v : cut.w) v /= nrm;
    for (const auto& old : kk_) {
      if (old.pivot != cut.pivot) continue;
      double dot = 0;
      for (std::size_t i = 0; i < cut.w.size(); ++i) dot += cut.w[i] * old.w[i];
      if (std::abs(dot) > 1.0 - dup_tol_) return false;
    }
    kk_.push_back(std::move(cut));
    return true;
  }

  bool insert(RowCut cut) {
    rows_.push_back(std::move(cut));
    return true;
  }

  const std::vector<LinearCut>& linear() const { return linear_; }
  const std::vector<SocCut>& soc() const { return soc_; }
  const std::vector<KkCut>& kk() const { return kk_; }
  const std::vector<RowCut>& rows() const { return rows_; }
  std::size_t total() const { return linear_.size() + soc_.size() + kk_.size() + rows_.size(); }

 private:
  double dup_tol_, psd_tol_;
  std::vector<LinearCut> linear_;
  std::vector<SocCut> soc_;
  std::vector<KkCut> kk_;
  std::vector<RowCut> rows_;
};

/// No-good row excluding exactly one binary assignment:
/// sum_{i: x_i = 1} (1 - x_i) + sum_{i: x_i = 0} x_i >= 1.
inline RowCut no_good_cut(const std::vector<double>& x_hat) {
  RowCut cut;
  double rhs = 1.0;
  for (int i = 0; i < static_cast<int>(x_hat.size()); ++i) {
    if (x_hat[i] > 0.5) {
      cut.coef_x.push_back({i, -1.0});
      rhs -= 1.0;
    } else {
      cut.coef_x.push_back({i, 1.0});
    }
  }
  cut.rhs = rhs;
  return cut;
}

}  // namespace isdp
