#pragma once

// Top-level algorithms. All three share the bound bookkeeping: the master
// value is a non-decreasing lower bound, exact inner evaluations give a
// non-increasing upper bound, and a relative gap test terminates.
//
//   run_oa        multi-tree outer approximation; MILP masters seeded with
//                 the pairwise polyhedral cuts, aggregate dual-certificate
//                 cuts per iteration.
//   run_oa_soc    multi-tree spectral variant; MISOCP masters carrying the
//                 spectral seed cuts, certificate cuts appended in the
//                 configured disaggregation mode.
//   run_lazy_soc  single branch-and-bound tree with a lazy eigenvector cut
//                 on every integer-feasible incumbent.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isdp/bb.hpp"
#include "isdp/common.hpp"
#include "isdp/cuts.hpp"
#include "isdp/inner.hpp"
#include "isdp/model.hpp"

namespace isdp {

enum class SolveStatus { Optimal, TimeLimit, IterationLimit, Infeasible, Error };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Error: return "error";
  }
  return "?";
}

enum class CutMode { Aggregate, Linear, Soc, Kk };

struct IterationRecord {
  long iter = 0;
  double lb = -kInf, ub = kInf, gap = kInf;  // minimization form
  long new_cuts = 0;
  long nodes = 0;
  double elapsed_s = 0.0;
  std::string assignment;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Error;
  Sense sense = Sense::Min;
  double value = kInf;      // user orientation
  double bound = -kInf;     // user orientation (proof bound)
  double min_value = kInf;  // minimization form, for internal comparisons
  double min_bound = -kInf;
  double gap = kInf;        // relative
  std::vector<double> x;
  long iterations = 0;
  long total_cuts = 0;
  long total_nodes = 0;
  long lazy_rounds = 0;
  double wall_s = 0.0;
  std::vector<IterationRecord> records;
};

struct OaLimits {
  double time_limit_s = 3600.0;
  long max_iterations = 1000000;
  long node_limit = 1000000000L;
};

/// Relative gap test with unit floor: (ub - lb) <= eps * max(1, |ub|).
inline bool gap_test(double lb, double ub, double eps) {
  return ub - lb <= eps * std::max(1.0, std::abs(ub));
}

/// Tracks integer assignments across iterations; on a revisit with the gap
/// still open, emits the no-good row excluding exactly that point.
class AntiCycleGuard {
 public:
  std::optional<RowCut> observe(const std::vector<double>& x_hat) {
    std::string key = assignment_key(x_hat);
    const int count = ++seen_[key];
    if (count >= 2) return no_good_cut(x_hat);
    return std::nullopt;
  }
  int count(const std::vector<double>& x_hat) const {
    auto it = seen_.find(assignment_key(x_hat));
    return it == seen_.end() ? 0 : it->second;
  }
  static std::string assignment_key(const std::vector<double>& x) {
    std::string key;
    key.reserve(x.size());
    for (double v : x) key.push_back(v > 0.5 ? '1' : '0');
    return key;
  }

 private:
  std::map<std::string, int> seen_;
};

namespace oa_detail {

inline void finalize_user_fields(SolveReport& rep) {
  if (rep.sense == Sense::Min) {
    rep.value = rep.min_value;
    rep.bound = rep.min_bound;
  } else {
    rep.value = rep.min_value == kInf ? -kInf : -rep.min_value;
    rep.bound = rep.min_bound == -kInf ? kInf : -rep.min_bound;
  }
  rep.gap = rep.min_value == kInf || rep.min_bound == -kInf
                ? kInf
                : (rep.min_value - rep.min_bound) / std::max(1.0, std::abs(rep.min_value));
  if (rep.gap < 0) rep.gap = 0;
}

// shared multi-tree OA loop over a BSDP master
inline SolveReport run_multitree(const BsdpInstance& b, double eps, const OaLimits& limits,
                                 CutMode mode, bool soc_master) {
  StopWatch watch;
  Deadline deadline(limits.time_limit_s);
  SolveReport rep;
  rep.sense = b.sense;

  CutPool pool;
  long cuts_added = 0;
  if (!soc_master) {
    for (auto& c : initial_polyhedral(b.n))
      if (pool.insert(std::move(c))) ++cuts_added;
  } else {
    for (auto& c : spectral_seed(b))
      if (pool.insert(std::move(c))) ++cuts_added;
  }
  rep.total_cuts = cuts_added;

  BsdpMaster master(b, soc_master);
  AntiCycleGuard guard;
  double lb = -kInf, ub = kInf;

  for (long iter = 1; iter <= limits.max_iterations; ++iter) {
    if (deadline.expired()) {
      rep.status = SolveStatus::TimeLimit;
      break;
    }
    BranchLimits bl;
    bl.deadline = deadline;
    bl.node_limit = limits.node_limit;
    MasterResult mr = solve_master(master, pool, LazyHook{}, bl, kInf);
    rep.total_nodes += mr.nodes;
    rep.iterations = iter;

    if (mr.status == MasterStatus::Infeasible) {
      // every remaining assignment is excluded; the incumbent (if any) is it
      if (ub < kInf) {
        lb = ub;
        rep.status = SolveStatus::Optimal;
      } else {
        rep.status = SolveStatus::Infeasible;
      }
      break;
    }
    if (mr.status == MasterStatus::TimeLimit) {
      rep.status = SolveStatus::TimeLimit;
      if (mr.bound > -kInf) lb = std::max(lb, std::min(mr.bound, ub));
      break;
    }
    if (mr.status == MasterStatus::NodeLimit) {
      rep.status = SolveStatus::IterationLimit;
      if (mr.bound > -kInf) lb = std::max(lb, std::min(mr.bound, ub));
      break;
    }
    if (mr.status != MasterStatus::Optimal) {
      rep.status = SolveStatus::Error;
      break;
    }

    lb = std::max(lb, mr.bound);
    const std::vector<double>& x_hat = mr.x;
    long new_cuts = 0;

    InnerResult ir = solve_inner_sdp(b, x_hat, IpmOptions{});
    if (ir.status == ConicStatus::Optimal) {
      if (ir.value < ub) {
        ub = ir.value;
        rep.x = x_hat;
        rep.min_value = ub;
      }
    } else {
      // infeasible assignment: exclude it and add whatever certificate the
      // Farkas solve produced
      if (pool.insert(no_good_cut(x_hat))) ++new_cuts;
      if (ir.farkas_row) {
        RowCut benders;  // y^T rhs(x) <= 0  ->  -(coef) x >= base
        for (const auto& [xi, coef] : ir.farkas_row->coef) benders.coef_x.push_back({xi, -coef});
        benders.rhs = ir.farkas_row->base;
        if (pool.insert(std::move(benders))) ++new_cuts;
      }
      if (ir.S_cert && pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.lb = lb;
    rec.ub = ub;
    rec.gap = ub == kInf || lb == -kInf ? kInf : (ub - lb) / std::max(1.0, std::abs(ub));
    rec.nodes = mr.nodes;
    rec.assignment = AntiCycleGuard::assignment_key(x_hat);

    if (ub < kInf && lb > -kInf && gap_test(lb, ub, eps)) {
      rec.new_cuts = new_cuts;
      rec.elapsed_s = watch.elapsed_s();
      rep.records.push_back(std::move(rec));
      rep.status = SolveStatus::Optimal;
      break;
    }

    if (auto ng = guard.observe(x_hat)) {
      if (pool.insert(std::move(*ng))) ++new_cuts;
    }
    if (ir.status == ConicStatus::Optimal && ir.S_cert) {
      switch (mode) {
        case CutMode::Aggregate:
          if (pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
          break;
        case CutMode::Linear:
          for (auto& c : disaggregate_linear(*ir.S_cert))
            if (pool.insert(std::move(c))) ++new_cuts;
          break;
        case CutMode::Soc:
          if (soc_master) {
            for (auto& c : disaggregate_soc(*ir.S_cert))
              if (pool.insert(std::move(c))) ++new_cuts;
            // the corner row of the certificate is not representable as a
            // SOC cut; keep the aggregate as a safety net for convergence
            if (pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
          } else {
            if (pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
          }
          break;
        case CutMode::Kk:
          if (soc_master) {
            for (auto& c : kk_cuts(b.n + 1, KkMode::Certificate, &*ir.S_cert))
              if (pool.insert(std::move(c))) ++new_cuts;
            if (pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
          } else {
            if (pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
          }
          break;
      }
    }
    cuts_added += new_cuts;
    rep.total_cuts = cuts_added;
    rec.new_cuts = new_cuts;
    rec.elapsed_s = watch.elapsed_s();
    rep.records.push_back(std::move(rec));

    if (iter == limits.max_iterations) rep.status = SolveStatus::IterationLimit;
  }

  rep.min_bound = std::min(lb, ub);
  rep.wall_s = watch.elapsed_s();
  finalize_user_fields(rep);
  return rep;
}

}  // namespace oa_detail

/// Algorithm: pure outer approximation on the lifted BSDP.
inline SolveReport run_oa(const BsdpInstance& b, double eps = 1e-6, const OaLimits& limits = {},
                          CutMode mode = CutMode::Aggregate) {
  return oa_detail::run_multitree(b, eps, limits, mode, /*soc_master=*/false);
}

/// Algorithm: spectral second-order outer approximation.
inline SolveReport run_oa_soc(const BsdpInstance& b, double eps = 1e-6, const OaLimits& limits = {},
                              CutMode mode = CutMode::Soc) {
  return oa_detail::run_multitree(b, eps, limits, mode, /*soc_master=*/true);
}

/// Algorithm: spectral lazy second-order branch-and-cut. One tree; every
/// integer-feasible node solution is tested for lifted positive
/// semidefiniteness and either accepted (with its exact objective) or cut by
/// the minimum eigenvector.
inline SolveReport run_lazy_soc(const BsdpInstance& b, double eps = 1e-6,
                                const OaLimits& limits = {}, CutMode mode = CutMode::Soc) {
  (void)mode;  // the lazy separation is always the minimum-eigenvector cut
  StopWatch watch;
  Deadline deadline(limits.time_limit_s);
  SolveReport rep;
  rep.sense = b.sense;

  CutPool pool;
  for (auto& c : spectral_seed(b)) pool.insert(std::move(c));
  BsdpMaster master(b, /*soc=*/true);

  long lazy_cuts = 0;
  double best_exact = kInf;
  LazyHook hook = [&](const SymMatrix& xm, const std::vector<double>& x, double node_value) {
    LazyDecision dec;
    LiftedMatrix lifted = lift(xm, x);
    auto [lam, w] = min_eig(lifted.M);
    const bool feas = b.point_feasible(x, 1e-6);
    if (!feas) {
      dec.accept = false;
      dec.row_cuts.push_back(no_good_cut(x));
      if (lam < -1e-12) dec.lifted_cuts.push_back({SymMatrix::outer(w)});
      return dec;
    }
    const double exact = b.min_objective_at(x);
    const double value_certified_tol = std::max(1e-9, 5e-7 * std::max(1.0, std::abs(exact)));
    if (lam < -eps && exact - node_value > value_certified_tol) {
      dec.accept = false;
      dec.lifted_cuts.push_back({SymMatrix::outer(w)});
      ++lazy_cuts;
      return dec;
    }
    dec.accept = true;
    dec.exact_value = exact;
    dec.exact_X = SymMatrix::outer(x);
    if (lam < -1e-12) dec.lifted_cuts.push_back({SymMatrix::outer(w)});
    if (*dec.exact_value < best_exact) {
      best_exact = *dec.exact_value;
      IterationRecord rec;
      rec.iter = static_cast<long>(rep.records.size()) + 1;
      rec.ub = best_exact;
      rec.assignment = AntiCycleGuard::assignment_key(x);
      rec.elapsed_s = watch.elapsed_s();
      rep.records.push_back(std::move(rec));
    }
    return dec;
  };

  BranchLimits bl;
  bl.deadline = deadline;
  bl.node_limit = limits.node_limit;
  MasterResult mr = solve_master(master, pool, hook, bl, kInf);

  rep.total_nodes = mr.nodes;
  rep.lazy_rounds = mr.lazy_rounds;
  rep.iterations = mr.lazy_rounds;
  rep.total_cuts = static_cast<long>(pool.total());
  rep.min_value = mr.value;
  rep.min_bound = mr.bound;
  rep.x = mr.x;
  switch (mr.status) {
    case MasterStatus::Optimal: rep.status = SolveStatus::Optimal; break;
    case MasterStatus::Infeasible: rep.status = SolveStatus::Infeasible; break;
    case MasterStatus::TimeLimit: rep.status = SolveStatus::TimeLimit; break;
    case MasterStatus::NodeLimit: rep.status = SolveStatus::IterationLimit; break;
    case MasterStatus::Abort: rep.status = SolveStatus::Error; break;
  }
  IterationRecord final_rec;
  final_rec.iter = static_cast<long>(rep.records.size()) + 1;
  final_rec.lb = rep.min_bound;
  final_rec.ub = rep.min_value;
  final_rec.gap = rep.min_value == kInf ? kInf
                                        : (rep.min_value - rep.min_bound) /
                                              std::max(1.0, std::abs(rep.min_value));
  final_rec.nodes = mr.nodes;
  final_rec.new_cuts = lazy_cuts;
  final_rec.elapsed_s = watch.elapsed_s();
  rep.records.push_back(std::move(final_rec));
  rep.wall_s = watch.elapsed_s();
  oa_detail::finalize_user_fields(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// General ISDP path for the pure outer approximation.
// ---------------------------------------------------------------------------

struct IsdpInnerResult {
  ConicStatus status = ConicStatus::SlowProgress;
  SymMatrix X;
  double value = kInf;
  std::optional<SymMatrix> S_cert;  // dimension n
  std::optional<RowCut> farkas_cut;
};

/// Inner SDP for a general ISDP: integer entries pinned to the assignment
/// with exact equality rows. Assignments on the boundary of the feasible box
/// can produce zero-interior slices; those solves end in SlowProgress, and
/// the near-feasible best iterate is salvaged for an approximate upper bound
/// plus a clipped (hence still valid) dual-slack cut.
inline IsdpInnerResult solve_inner_isdp(const IsdpInstance& p, const std::vector<double>& vals,
                                        const IpmOptions& base_opts = {}) {
  const int n = p.n;
  IsdpInnerResult res;
  ConicProblem cp;
  cp.blocks.push_back({BlockKind::Psd, n});
  cp.c.assign(cp.total_dim(), 0.0);
  for (int i = 0; i < n; ++i) {
    cp.c[svec_index(n, i, i)] = p.C(i, i);
    for (int j = 0; j < i; ++j) cp.c[svec_index(n, i, j)] = svec_coeff(i, j, p.C(i, j));
  }
  for (const auto& [a, rhs] : p.equalities) {
    auto& row = cp.add_row(rhs);
    for (int i = 0; i < n; ++i) {
      if (a(i, i) != 0.0) row.add(svec_index(n, i, i), a(i, i));
      for (int j = 0; j < i; ++j)
        if (a(i, j) != 0.0) row.add(svec_index(n, i, j), svec_coeff(i, j, a(i, j)));
    }
  }
  const int fix_row_base = static_cast<int>(cp.rows.size());
  const double irt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t k = 0; k < p.integer_entries.size(); ++k) {
    const auto& e = p.integer_entries[k];
    auto& row = cp.add_row(vals[k]);
    row.add(svec_index(n, e.i, e.j), e.i == e.j ? 1.0 : irt2);
  }
  IpmOptions opts = base_opts;
  opts.cutoff = kInf;
  ConicSolution sol = solve_conic(cp, opts);
  if (sol.status == ConicStatus::Optimal ||
      (sol.status != ConicStatus::PrimalInfeasible && sol.rp <= 1e-6 && sol.rd <= 1e-6)) {
    res.status = sol.status;
    res.X = smat_of(sol.z.head(svec_dim(n)), n);
    res.value = sol.primal_obj;
    if (sol.status == ConicStatus::Optimal) {
      try {
        res.S_cert = extract_dual_certificate(sol, 0, n);
      } catch (const CertificateError&) {
      }
    } else {
      // degenerate slice: the clipped PSD slack is still a valid cut even if
      // the dual never converged
      SymMatrix s = smat_of(sol.s.head(svec_dim(n)), n);
      EigenDecomposition e = sym_eigen(s);
      SymMatrix out(n);
      for (int k = 0; k < n; ++k) {
        if (e.values[k] <= 1e-12) continue;
        auto v = e.vectors.col(k);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j <= i; ++j) out.add(i, j, e.values[k] * v[i] * v[j]);
      }
      if (out.frobenius_norm() > 1e-12) {
        out *= 1.0 / out.frobenius_norm();
        res.S_cert = out;
      }
    }
    return res;
  }
  if (sol.status == ConicStatus::PrimalInfeasible) {
    res.status = ConicStatus::PrimalInfeasible;
    // y^T b(assign) <= 0 for feasible assignments; rows past fix_row_base
    // carry the assignment in their rhs
    RowCut cut;
    double base = 0.0;
    for (int r = 0; r < fix_row_base; ++r) base += sol.y[r] * cp.rows[r].rhs;
    for (std::size_t k = 0; k < p.integer_entries.size(); ++k) {
      const auto& e = p.integer_entries[k];
      const double coef = sol.y[fix_row_base + static_cast<int>(k)];
      if (coef != 0.0) cut.coef_X.push_back({{e.i, e.j}, -coef});
    }
    cut.rhs = base;
    res.farkas_cut = std::move(cut);
    return res;
  }
  res.status = sol.status;
  return res;
}

/// Pure outer approximation over a general ISDP.
inline SolveReport run_oa(const IsdpInstance& p, double eps = 1e-6, const OaLimits& limits = {},
                          CutMode mode = CutMode::Aggregate) {
  StopWatch watch;
  Deadline deadline(limits.time_limit_s);
  SolveReport rep;
  rep.sense = p.sense;

  CutPool pool;
  for (auto& c : pairwise_psd_seeds(p.n)) pool.insert(std::move(c));
  IsdpMaster master(p);
  double lb = -kInf, ub = kInf;
  std::map<std::string, int> seen;

  for (long iter = 1; iter <= limits.max_iterations; ++iter) {
    if (deadline.expired()) {
      rep.status = SolveStatus::TimeLimit;
      break;
    }
    BranchLimits bl;
    bl.deadline = deadline;
    bl.node_limit = limits.node_limit;
    MasterResult mr = solve_master(master, pool, LazyHook{}, bl, kInf);
    rep.total_nodes += mr.nodes;
    rep.iterations = iter;
    if (mr.status == MasterStatus::Infeasible) {
      rep.status = ub < kInf ? SolveStatus::Optimal : SolveStatus::Infeasible;
      if (ub < kInf) lb = ub;
      break;
    }
    if (mr.status != MasterStatus::Optimal) {
      rep.status = mr.status == MasterStatus::TimeLimit ? SolveStatus::TimeLimit
                                                        : SolveStatus::Error;
      break;
    }
    lb = std::max(lb, mr.bound);
    std::vector<double> vals = mr.x;
    for (double& v : vals) v = std::round(v);

    long new_cuts = 0;
    IsdpInnerResult ir = solve_inner_isdp(p, vals);
    if (ir.status != ConicStatus::PrimalInfeasible && ir.value < kInf) {
      if (ir.value < ub) {
        ub = ir.value;
        rep.min_value = ub;
        rep.x = vals;
      }
    } else if (ir.farkas_cut) {
      if (pool.insert(std::move(*ir.farkas_cut))) ++new_cuts;
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.lb = lb;
    rec.ub = ub;
    rec.gap = ub == kInf || lb == -kInf ? kInf : (ub - lb) / std::max(1.0, std::abs(ub));
    rec.nodes = mr.nodes;
    for (double v : vals) rec.assignment += std::to_string(static_cast<long>(v)) + ",";

    if (ub < kInf && lb > -kInf && gap_test(lb, ub, eps)) {
      rep.records.push_back(std::move(rec));
      rep.status = SolveStatus::Optimal;
      break;
    }
    if (ir.S_cert) {
      if (mode == CutMode::Linear) {
        for (auto& c : disaggregate_linear(*ir.S_cert))
          if (pool.insert(std::move(c))) ++new_cuts;
      } else {
        if (pool.insert(LinearCut{*ir.S_cert})) ++new_cuts;
      }
    }
    // finite integer boxes guarantee termination only when revisits are cut
    // off; count them and stop if no progress is possible
    const int visits = ++seen[rec.assignment];
    if (visits >= 3 && new_cuts == 0) {
      rep.status = SolveStatus::IterationLimit;
      rep.records.push_back(std::move(rec));
      break;
    }
    rec.new_cuts = new_cuts;
    rec.elapsed_s = watch.elapsed_s();
    rep.total_cuts += new_cuts;
    rep.records.push_back(std::move(rec));
    if (iter == limits.max_iterations) rep.status = SolveStatus::IterationLimit;
  }
  rep.min_bound = std::min(lb, ub);
  rep.wall_s = watch.elapsed_s();
  oa_detail::finalize_user_fields(rep);
  return rep;
}

}  // namespace isdp
