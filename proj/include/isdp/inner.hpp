#pragma once

// Inner SDP at a fixed integer assignment, over the lifted matrix
// M = [[X, x],[x^T, 1]]. For binary x the exact feasible set collapses to the
// single point X = xx^T, which kills the Slater condition; the diagonal
// linking rows are therefore relaxed to |X_ii - x_i| <= eta, which restores
// an interior while any dual PSD slack still certifies a valid cut. The
// primal solution and objective value are reported from the forced point
// itself; the interior-point solve supplies the dual side.

#include <optional>
#include <vector>

#include "isdp/conic.hpp"
#include "isdp/model.hpp"

namespace isdp {

inline constexpr double kInnerEta = 1e-7;

/// A row's rhs as an affine function of the integer assignment,
/// rhs = base + coef^T x. Used to turn Farkas certificates into master cuts.
struct AffineRhs {
  double base = 0.0;
  std::vector<std::pair<int, double>> coef;  // (x index, coefficient)
};

struct InnerProblem {
  ConicProblem conic;
  std::vector<AffineRhs> rhs_map;  // one per row
  int psd_offset = 0;              // scalar offset of the lifted PSD block
  int lifted_dim = 0;
};

/// Lifted objective coefficients: <[[C, d0],[d0^T, 0]], M> = <C,X> + 2 d0^T x.
inline void set_lifted_objective(ConicProblem& p, int psd_offset, const SymMatrix& c,
                                 const std::vector<double>& d0) {
  const int n = c.dim();
  const int pdim = n + 1;
  for (int i = 0; i < n; ++i) {
    p.c[psd_offset + svec_index(pdim, i, i)] = c(i, i);
    for (int j = 0; j < i; ++j)
      p.c[psd_offset + svec_index(pdim, i, j)] = svec_coeff(i, j, c(i, j));
    p.c[psd_offset + svec_index(pdim, n, i)] = svec_coeff(n, i, d0[i]);
  }
}

/// Adds <A,X> + d^T x contributions of a BSDP constraint to a conic row.
inline void add_lifted_constraint_coeffs(ConicRow& row, int psd_offset, int n, const SymMatrix& a,
                                         const std::vector<double>& d) {
  const int pdim = n + 1;
  for (int i = 0; i < n; ++i) {
    if (a(i, i) != 0.0) row.add(psd_offset + svec_index(pdim, i, i), a(i, i));
    for (int j = 0; j < i; ++j)
      if (a(i, j) != 0.0) row.add(psd_offset + svec_index(pdim, i, j), svec_coeff(i, j, a(i, j)));
    if (d[i] != 0.0) row.add(psd_offset + svec_index(pdim, n, i), svec_coeff(n, i, d[i] / 2.0));
  }
}

inline InnerProblem build_inner_problem(const BsdpInstance& b, const std::vector<double>& x_fixed,
                                        double eta = kInnerEta) {
  const int n = b.n;
  const int pdim = n + 1;
  InnerProblem ip;
  ip.lifted_dim = pdim;
  ip.psd_offset = 0;

  int slack_count = 0;
  for (const auto& c : b.constraints)
    if (c.rel == Relation::LessEqual) ++slack_count;
  slack_count += 2 * n;  // relaxed diagonal linking

  ConicProblem& p = ip.conic;
  p.blocks.push_back({BlockKind::Psd, pdim});
  if (slack_count > 0) p.blocks.push_back({BlockKind::Nonneg, slack_count});
  p.c.assign(p.total_dim(), 0.0);
  set_lifted_objective(p, 0, b.C, b.d0);

  const int slack_base = svec_dim(pdim);
  int next_slack = 0;
  auto fixed_rhs = [&](double base) {
    ip.rhs_map.push_back({base, {}});
  };

  // corner M_{n+1,n+1} = 1
  {
    auto& row = p.add_row(1.0);
    row.add(svec_index(pdim, n, n), 1.0);
    fixed_rhs(1.0);
  }
  // x entries pinned: M_{i,n+1} = x_i
  const double irt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    auto& row = p.add_row(x_fixed[i]);
    row.add(svec_index(pdim, n, i), irt2);
    ip.rhs_map.push_back({0.0, {{i, 1.0}}});
  }
  // relaxed diagonal linking: X_ii <= x_i + eta and -X_ii <= -x_i + eta
  for (int i = 0; i < n; ++i) {
    auto& row = p.add_row(x_fixed[i] + eta);
    row.add(svec_index(pdim, i, i), 1.0);
    row.add(slack_base + next_slack++, 1.0);
    ip.rhs_map.push_back({eta, {{i, 1.0}}});

    auto& row2 = p.add_row(-x_fixed[i] + eta);
    row2.add(svec_index(pdim, i, i), -1.0);
    row2.add(slack_base + next_slack++, 1.0);
    ip.rhs_map.push_back({eta, {{i, -1.0}}});
  }
  // model constraints <A,X> + d^T x {<=,=} b
  for (const auto& c : b.constraints) {
    auto& row = p.add_row(c.b);
    add_lifted_constraint_coeffs(row, 0, n, c.A, c.d);
    if (c.rel == Relation::LessEqual) row.add(slack_base + next_slack++, 1.0);
    fixed_rhs(c.b);
  }
  // D x = t
  for (int r = 0; r < b.lin.rows; ++r) {
    auto& row = p.add_row(b.lin.t[r]);
    for (int i = 0; i < n; ++i)
      if (b.lin(r, i) != 0.0)
        row.add(svec_index(pdim, n, i), svec_coeff(n, i, b.lin(r, i) / 2.0));
    fixed_rhs(b.lin.t[r]);
  }
  return ip;
}

class CertificateError : public std::runtime_error {
 public:
  explicit CertificateError(const std::string& m) : std::runtime_error(m) {}
};

/// PSD-block dual slack, floored to the cone and normalized to unit
/// Frobenius norm. Requires an optimal or Farkas (primal infeasible) solve.
inline SymMatrix extract_dual_certificate(const ConicSolution& sol, int psd_offset, int pdim) {
  if (sol.status != ConicStatus::Optimal && sol.status != ConicStatus::PrimalInfeasible)
    throw CertificateError("dual certificate requested from a non-converged solve");
  if (sol.s.size() < psd_offset + svec_dim(pdim))
    throw CertificateError("solution has no PSD block");
  SymMatrix s = smat_of(sol.s.segment(psd_offset, svec_dim(pdim)), pdim);
  // clip tiny negative eigenvalues so the pool's PSD check is exact
  EigenDecomposition e = sym_eigen(s);
  SymMatrix out(pdim);
  for (int k = 0; k < pdim; ++k) {
    if (e.values[k] <= 0) continue;
    auto v = e.vectors.col(k);
    for (int i = 0; i < pdim; ++i)
      for (int j = 0; j <= i; ++j) out.add(i, j, e.values[k] * v[i] * v[j]);
  }
  const double nrm = out.frobenius_norm();
  if (nrm <= 1e-14) throw CertificateError("dual certificate vanished");
  out *= 1.0 / nrm;
  return out;
}

struct InnerResult {
  ConicStatus status = ConicStatus::SlowProgress;
  SymMatrix X;                      // forced primal solution (feasible case)
  double value = kInf;              // minimization-form objective
  std::optional<SymMatrix> S_cert;  // normalized dual certificate, dim n+1
  // Farkas data for infeasible assignments: y^T (base + F x) <= 0 is valid
  // for every assignment with a feasible inner problem
  std::optional<AffineRhs> farkas_row;
  int ipm_iterations = 0;
};

/// Feasible assignments: the lifted problem is reduced by Y := X - xx^T to
///
///   min <C,Y>  s.t.  |Y_ii| <= eta,  <A_k,Y> {<=,=} slack_k(x),  Y psd,
///
/// whose rows all live at the eta scale, so the equilibrated problem is well
/// conditioned even though the original lifted feasible set is a thin slab.
/// The dual PSD slack S_Y lifts back to the valid tight cut
/// T = [[S_Y, -S_Y x],[-x^T S_Y, x^T S_Y x]] on the lifted matrix.
inline InnerResult solve_inner_feasible(const BsdpInstance& b, const std::vector<double>& x_fixed,
                                        const IpmOptions& base_opts, double eta) {
  const int n = b.n;
  InnerResult res;
  res.status = ConicStatus::Optimal;
  res.X = SymMatrix::outer(x_fixed);
  res.value = b.min_objective_at(x_fixed);

  ConicProblem p;
  p.blocks.push_back({BlockKind::Psd, n});
  int slack_count = 2 * n;
  for (const auto& c : b.constraints)
    if (c.rel == Relation::LessEqual && c.A.frobenius_norm() > 0) ++slack_count;
  p.blocks.push_back({BlockKind::Nonneg, slack_count});
  p.c.assign(p.total_dim(), 0.0);
  for (int i = 0; i < n; ++i) {
    p.c[svec_index(n, i, i)] = b.C(i, i);
    for (int j = 0; j < i; ++j) p.c[svec_index(n, i, j)] = svec_coeff(i, j, b.C(i, j));
  }
  const int slack_base = svec_dim(n);
  int next_slack = 0;
  for (int i = 0; i < n; ++i) {
    auto& row = p.add_row(eta);
    row.add(svec_index(n, i, i), 1.0);
    row.add(slack_base + next_slack++, 1.0);
    auto& row2 = p.add_row(eta);
    row2.add(svec_index(n, i, i), -1.0);
    row2.add(slack_base + next_slack++, 1.0);
  }
  for (const auto& c : b.constraints) {
    if (c.A.frobenius_norm() == 0) continue;  // pure linear rows hold at x exactly
    double slack_rhs = c.b - c.A.quad_form(x_fixed);
    for (int i = 0; i < n; ++i) slack_rhs -= c.d[i] * x_fixed[i];
    auto& row = p.add_row(slack_rhs);
    for (int i = 0; i < n; ++i) {
      if (c.A(i, i) != 0.0) row.add(svec_index(n, i, i), c.A(i, i));
      for (int j = 0; j < i; ++j)
        if (c.A(i, j) != 0.0) row.add(svec_index(n, i, j), svec_coeff(i, j, c.A(i, j)));
    }
    if (c.rel == Relation::LessEqual) row.add(slack_base + next_slack++, 1.0);
  }

  IpmOptions opts = base_opts;
  opts.cutoff = kInf;
  ConicSolution sol = solve_conic(p, opts);
  res.ipm_iterations = sol.iterations;
  if (sol.status != ConicStatus::Optimal) return res;

  SymMatrix sy = extract_dual_certificate(sol, 0, n);
  SymMatrix t(n + 1);
  std::vector<double> sx = sy.matvec(x_fixed);
  double corner = 0;
  for (int i = 0; i < n; ++i) corner += sx[i] * x_fixed[i];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) t.set(i, j, sy(i, j));
    t.set(n, i, -sx[i]);
  }
  t.set(n, n, corner);
  const double nrm = t.frobenius_norm();
  if (nrm > 1e-14) {
    t *= 1.0 / nrm;
    res.S_cert = t;
  }
  return res;
}

/// Inner SDP at a fixed binary assignment. The primal side is analytic:
/// Diag(X - xx^T) = 0 with X - xx^T psd forces X = xx^T, so feasibility and
/// the objective value are evaluated exactly; an interior-point solve
/// supplies the dual certificate (or a Farkas row when x is infeasible).
inline InnerResult solve_inner_sdp(const BsdpInstance& b, const std::vector<double>& x_fixed,
                                   const IpmOptions& base_opts = {}) {
  if (b.point_feasible(x_fixed, 1e-9))
    return solve_inner_feasible(b, x_fixed, base_opts, kInnerEta);

  InnerResult res;
  InnerProblem ip = build_inner_problem(b, x_fixed);
  IpmOptions opts = base_opts;
  opts.cutoff = kInf;
  ConicSolution sol = solve_conic(ip.conic, opts);
  res.ipm_iterations = sol.iterations;

  res.status = ConicStatus::PrimalInfeasible;
  if (sol.status == ConicStatus::PrimalInfeasible) {
    // Farkas certificate: y with A^T y in -K*, b^T y = 1 > 0. Then any
    // assignment x admitting a feasible M satisfies y^T rhs(x) <= 0.
    AffineRhs cut;
    std::vector<double> xcoef(b.n, 0.0);
    for (int r = 0; r < static_cast<int>(ip.rhs_map.size()); ++r) {
      cut.base += sol.y[r] * ip.rhs_map[r].base;
      for (const auto& [xi, coef] : ip.rhs_map[r].coef) xcoef[xi] += sol.y[r] * coef;
    }
    for (int i = 0; i < b.n; ++i)
      if (xcoef[i] != 0.0) cut.coef.push_back({i, xcoef[i]});
    res.farkas_row = std::move(cut);
    // the PSD part of -A^T y is a valid linear cut as well
    Eigen::VectorXd aty = Eigen::VectorXd::Zero(ip.conic.total_dim());
    for (int r = 0; r < static_cast<int>(ip.conic.rows.size()); ++r)
      for (std::size_t k = 0; k < ip.conic.rows[r].idx.size(); ++k)
        aty[ip.conic.rows[r].idx[k]] += sol.y[r] * ip.conic.rows[r].val[k];
    SymMatrix sf = smat_of(Eigen::VectorXd(-aty.segment(ip.psd_offset, svec_dim(ip.lifted_dim))),
                           ip.lifted_dim);
    EigenDecomposition e = sym_eigen(sf);
    SymMatrix out(ip.lifted_dim);
    bool any = false;
    for (int k = 0; k < ip.lifted_dim; ++k) {
      if (e.values[k] <= 1e-12) continue;
      any = true;
      auto v = e.vectors.col(k);
      for (int i = 0; i < ip.lifted_dim; ++i)
        for (int j = 0; j <= i; ++j) out.add(i, j, e.values[k] * v[i] * v[j]);
    }
    if (any) {
      out *= 1.0 / out.frobenius_norm();
      res.S_cert = out;
    }
  }
  return res;
}

}  // namespace isdp
