#pragma once

// Branch-and-bound over the integer variables of an outer-approximation
// master. Node relaxations are LPs / SOCPs solved by the conic engine (the
// PSD cone never appears in a master; positive semidefiniteness enters only
// through cuts). Best-bound node selection with a depth dive every eighth
// node; a lazy hook can reject integer-feasible points and append cuts, in
// which case the node is re-solved.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "isdp/common.hpp"
#include "isdp/conic.hpp"
#include "isdp/cuts.hpp"
#include "isdp/model.hpp"

namespace isdp {

inline constexpr double kIntegralityTol = 1e-6;
inline constexpr double kCutSatisfactionTol = 1e-7;

/// Most-fractional branching index: minimal |x_i - 1/2| among fractional
/// entries, ties to the smallest index. Throws if everything is integral.
inline int branch_index(const std::vector<double>& x, double tol = kIntegralityTol) {
  int best = -1;
  double best_score = kInf;
  for (int i = 0; i < static_cast<int>(x.size()); ++i) {
    const double frac = std::abs(x[i] - std::round(x[i]));
    if (frac <= tol) continue;
    const double dist_half = std::abs(x[i] - std::floor(x[i]) - 0.5);
    if (dist_half < best_score - 1e-15) {
      best_score = dist_half;
      best = i;
    }
  }
  if (best < 0) throw std::logic_error("branch_index: no fractional entry");
  return best;
}

struct NodeBounds {
  std::vector<double> lo, hi;
};

struct MasterConic {
  ConicProblem problem;
  double objective_offset = 0.0;
  // extraction maps
  std::vector<int> x_col;          // per integer entity: column index or -1 when fixed
  std::vector<double> x_fixed;     // fixed value when x_col < 0
};

enum class MasterStatus { Optimal, Infeasible, NodeLimit, TimeLimit, Abort };

struct MasterResult {
  MasterStatus status = MasterStatus::Abort;
  std::vector<double> x;   // integer assignment of the incumbent
  SymMatrix X;             // incumbent matrix part
  double value = kInf;     // minimization-form objective of the incumbent
  double bound = -kInf;    // global lower bound
  long nodes = 0;
  long lazy_rounds = 0;
  long ipm_failures = 0;
};

struct LazyDecision {
  bool accept = true;
  std::vector<LinearCut> lifted_cuts;
  std::vector<KkCut> kk_cuts;
  std::vector<RowCut> row_cuts;
  // exact objective of the accepted point, when the hook can evaluate it
  std::optional<double> exact_value;
  std::optional<SymMatrix> exact_X;
};
using LazyHook =
    std::function<LazyDecision(const SymMatrix& X, const std::vector<double>& x, double node_value)>;

struct BranchLimits {
  Deadline deadline = Deadline::never();
  long node_limit = 1000000000L;
  long lazy_round_limit_per_node = 200;
};

// -------------------------------------------------------------------------
// BSDP master: variables are the off-diagonal X entries (free), x (nonneg,
// X_ii is identified with x_i through the diagonal linking), slacks, and one
// rotated-cone triple per SOC-type cut.
// -------------------------------------------------------------------------
class BsdpMaster {
 public:
  BsdpMaster(const BsdpInstance& b, bool soc_cuts_enabled)
      : b_(b), soc_enabled_(soc_cuts_enabled) {}

  const BsdpInstance& instance() const { return b_; }
  int num_entities() const { return b_.n; }
  bool soc_enabled() const { return soc_enabled_; }

  NodeBounds root_bounds() const {
    NodeBounds nb;
    nb.lo.assign(b_.n, 0.0);
    nb.hi.assign(b_.n, 1.0);
    return nb;
  }

  MasterConic build(const NodeBounds& nb, const CutPool& pool) const {
    const int n = b_.n;
    MasterConic mc;
    mc.x_col.assign(n, -1);
    mc.x_fixed.assign(n, 0.0);

    // column layout: [X offdiag][x][slacks] all nonneg, then rsoc triples.
    // Integer-feasible points have X = xx^T binary, so 0 <= X_ij <= 1 is a
    // valid box; it also keeps every master bounded with an empty cut set.
    const int n_off = n * (n - 1) / 2;
    int x_count = 0;
    for (int i = 0; i < n; ++i)
      if (nb.hi[i] - nb.lo[i] > 0.5) ++x_count;

    int slack_count = 0;
    for (const auto& c : b_.constraints)
      if (c.rel == Relation::LessEqual) ++slack_count;
    slack_count += x_count;      // upper bound rows x_i <= 1
    slack_count += 3 * n_off;    // McCormick rows per off-diagonal entry
    slack_count += static_cast<int>(pool.linear().size());
    slack_count += static_cast<int>(pool.rows().size());

    const int n_soc_cuts = soc_enabled_ ? static_cast<int>(pool.soc().size()) : 0;
    const int n_kk_cuts = soc_enabled_ ? static_cast<int>(pool.kk().size()) : 0;

    ConicProblem& p = mc.problem;
    p.blocks.push_back({BlockKind::Nonneg, n_off + x_count + slack_count});
    for (int k = 0; k < n_soc_cuts + n_kk_cuts; ++k) p.blocks.push_back({BlockKind::Rsoc, 3});
    p.c.assign(p.total_dim(), 0.0);

    const int x_base = n_off;
    int next_x = 0;
    for (int i = 0; i < n; ++i) {
      if (nb.hi[i] - nb.lo[i] > 0.5) {
        mc.x_col[i] = x_base + next_x++;
      } else {
        mc.x_col[i] = -1;
        mc.x_fixed[i] = nb.lo[i];
      }
    }
    const int slack_base = x_base + x_count;
    int next_slack = 0;
    const int soc_base = x_base + x_count + slack_count;

    // affine accumulator over (x_i or constant, X_ij offdiag)
    auto xcoef = [&](ConicRow& row, double& constant, int i, double coef) {
      if (coef == 0.0) return;
      if (mc.x_col[i] >= 0)
        row.add(mc.x_col[i], coef);
      else
        constant += coef * mc.x_fixed[i];
    };
    auto Xcoef = [&](ConicRow& row, int i, int j, double coef) {
      if (coef != 0.0) row.add(off_index(i, j), coef);
    };
    // coefficient of a lifted-matrix entry M_ab (0-based, lifted dim n+1)
    auto Mcoef = [&](ConicRow& row, double& constant, int a, int bb, int i_dummy, double coef) {
      (void)i_dummy;
      if (coef == 0.0) return;
      if (a < bb) std::swap(a, bb);
      if (a < n) {
        if (a == bb)
          xcoef(row, constant, a, coef);  // X_ii = x_i
        else
          Xcoef(row, a, bb, coef);
      } else if (bb < n) {
        xcoef(row, constant, bb, coef);  // M_{i,n} = x_i
      } else {
        constant += coef;  // corner
      }
    };

    // objective <C,X> + 2 d0^T x
    {
      double constant = 0.0;
      ConicRow obj;  // reuse the accumulator machinery
      for (int i = 0; i < n; ++i) {
        xcoef(obj, constant, i, b_.C(i, i) + 2.0 * b_.d0[i]);
        for (int j = 0; j < i; ++j) Xcoef(obj, i, j, 2.0 * b_.C(i, j));
      }
      for (std::size_t k = 0; k < obj.idx.size(); ++k) p.c[obj.idx[k]] += obj.val[k];
      mc.objective_offset = constant;
    }

    // model rows
    for (const auto& c : b_.constraints) {
      double constant = 0.0;
      auto& row = p.add_row(c.b);
      for (int i = 0; i < n; ++i) {
        xcoef(row, constant, i, c.A(i, i) + c.d[i]);
        for (int j = 0; j < i; ++j) Xcoef(row, i, j, 2.0 * c.A(i, j));
      }
      row.rhs -= constant;
      if (c.rel == Relation::LessEqual) row.add(slack_base + next_slack++, 1.0);
    }
    for (int r = 0; r < b_.lin.rows; ++r) {
      double constant = 0.0;
      auto& row = p.add_row(b_.lin.t[r]);
      for (int i = 0; i < n; ++i) xcoef(row, constant, i, b_.lin(r, i));
      row.rhs -= constant;
    }
    // x_i <= 1 for unfixed entries (lower bound 0 is the cone itself)
    for (int i = 0; i < n; ++i) {
      if (mc.x_col[i] < 0) continue;
      auto& row = p.add_row(1.0);
      row.add(mc.x_col[i], 1.0);
      row.add(slack_base + next_slack++, 1.0);
    }
    // binary products: X_ij <= x_i, X_ij <= x_j, X_ij >= x_i + x_j - 1
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        const int col = off_index(i, j);
        for (int other : {i, j}) {
          double constant = 0.0;
          auto& row = p.add_row(0.0);
          row.add(col, 1.0);
          xcoef(row, constant, other, -1.0);
          row.rhs -= constant;
          row.add(slack_base + next_slack++, 1.0);
        }
        double constant = 0.0;
        auto& row = p.add_row(1.0);
        row.add(col, -1.0);
        xcoef(row, constant, i, 1.0);
        xcoef(row, constant, j, 1.0);
        row.rhs -= constant;
        row.add(slack_base + next_slack++, 1.0);
      }
    // linear cuts <T, lift(X,x)> >= 0
    for (const auto& cut : pool.linear()) {
      double constant = 0.0;
      auto& row = p.add_row(0.0);
      const SymMatrix& t = cut.T;
      for (int a = 0; a < n + 1; ++a) {
        Mcoef(row, constant, a, a, 0, t(a, a));
        for (int bb = 0; bb < a; ++bb) Mcoef(row, constant, a, bb, 0, 2.0 * t(a, bb));
      }
      row.rhs -= constant;
      row.add(slack_base + next_slack++, -1.0);  // lhs - s = rhs, s >= 0 encodes lhs >= rhs
    }
    // plain rows: lhs >= rhs
    for (const auto& cut : pool.rows()) {
      double constant = 0.0;
      auto& row = p.add_row(cut.rhs);
      for (const auto& [i, coef] : cut.coef_x) xcoef(row, constant, i, coef);
      for (const auto& [ij, coef] : cut.coef_X) {
        if (ij.first == ij.second)
          xcoef(row, constant, ij.first, coef);
        else
          Xcoef(row, ij.first, ij.second, coef);
      }
      row.rhs -= constant;
      row.add(slack_base + next_slack++, -1.0);
    }
    // rotated-cone cuts
    int soc_slot = soc_base;
    if (soc_enabled_) {
      for (const auto& cut : pool.soc()) {
        // r = v^T X v, s = 1/2, t = v^T x
        {
          double constant = 0.0;
          auto& row = p.add_row(0.0);
          row.add(soc_slot + 0, 1.0);
          for (int i = 0; i < n; ++i) {
            xcoef(row, constant, i, -cut.v[i] * cut.v[i]);
            for (int j = 0; j < i; ++j) Xcoef(row, i, j, -2.0 * cut.v[i] * cut.v[j]);
          }
          row.rhs -= constant;
        }
        {
          auto& row = p.add_row(0.5);
          row.add(soc_slot + 1, 1.0);
        }
        {
          double constant = 0.0;
          auto& row = p.add_row(0.0);
          row.add(soc_slot + 2, 1.0);
          for (int i = 0; i < n; ++i) xcoef(row, constant, i, -cut.v[i]);
          row.rhs -= constant;
        }
        soc_slot += 3;
      }
      for (const auto& cut : pool.kk()) {
        // (M_pp, wbar^T Mbar wbar, sqrt2 wbar^T u) in V3
        const int piv = cut.pivot;
        {
          double constant = 0.0;
          auto& row = p.add_row(0.0);
          row.add(soc_slot + 0, 1.0);
          Mcoef(row, constant, piv, piv, 0, -1.0);
          row.rhs -= constant;
        }
        {
          double constant = 0.0;
          auto& row = p.add_row(0.0);
          row.add(soc_slot + 1, 1.0);
          for (int a = 0; a < n + 1; ++a) {
            if (a == piv) continue;
            Mcoef(row, constant, a, a, 0, -cut.w[a] * cut.w[a]);
            for (int bb = 0; bb < a; ++bb) {
              if (bb == piv) continue;
              Mcoef(row, constant, a, bb, 0, -2.0 * cut.w[a] * cut.w[bb]);
            }
          }
          row.rhs -= constant;
        }
        {
          double constant = 0.0;
          auto& row = p.add_row(0.0);
          row.add(soc_slot + 2, 1.0);
          const double rt2 = std::sqrt(2.0);
          for (int a = 0; a < n + 1; ++a) {
            if (a == piv) continue;
            Mcoef(row, constant, a, piv, 0, -rt2 * cut.w[a]);
          }
          row.rhs -= constant;
        }
        soc_slot += 3;
      }
    }
    return mc;
  }

  std::vector<double> extract_x(const MasterConic& mc, const ConicSolution& sol) const {
    std::vector<double> x(b_.n);
    for (int i = 0; i < b_.n; ++i)
      x[i] = mc.x_col[i] >= 0 ? sol.z[mc.x_col[i]] : mc.x_fixed[i];
    return x;
  }

  SymMatrix extract_X(const MasterConic& mc, const ConicSolution& sol,
                      const std::vector<double>& x) const {
    SymMatrix xm(b_.n);
    for (int i = 0; i < b_.n; ++i) {
      xm.set(i, i, x[i]);
      for (int j = 0; j < i; ++j) xm.set(i, j, sol.z[off_index(i, j)]);
    }
    return xm;
  }

 private:
  int off_index(int i, int j) const {
    if (i < j) std::swap(i, j);
    // strict lower triangle, column-major
    return j * (b_.n - 1) - j * (j - 1) / 2 + (i - j - 1);
  }

  const BsdpInstance& b_;
  bool soc_enabled_;
};

// -------------------------------------------------------------------------
// General ISDP master: variables are all upper-triangle entries of X (free),
// integer entries carry bound rows, cuts act on X itself.
// -------------------------------------------------------------------------
class IsdpMaster {
 public:
  explicit IsdpMaster(const IsdpInstance& p) : p_(p) {}

  const IsdpInstance& instance() const { return p_; }
  int num_entities() const { return static_cast<int>(p_.integer_entries.size()); }

  NodeBounds root_bounds() const {
    NodeBounds nb;
    for (const auto& e : p_.integer_entries) {
      nb.lo.push_back(e.lo);
      nb.hi.push_back(e.hi);
    }
    return nb;
  }

  MasterConic build(const NodeBounds& nb, const CutPool& pool) const {
    const int n = p_.n;
    MasterConic mc;
    const int n_entries = n * (n + 1) / 2;
    int slack_count = 2 * num_entities() + static_cast<int>(pool.linear().size()) +
                      static_cast<int>(pool.rows().size());

    ConicProblem& p = mc.problem;
    p.blocks.push_back({BlockKind::Free, n_entries});
    if (slack_count > 0) p.blocks.push_back({BlockKind::Nonneg, slack_count});
    p.c.assign(p.total_dim(), 0.0);
    for (int i = 0; i < n; ++i) {
      p.c[entry_index(i, i)] = p_.C(i, i);
      for (int j = 0; j < i; ++j) p.c[entry_index(i, j)] = 2.0 * p_.C(i, j);
    }
    const int slack_base = n_entries;
    int next_slack = 0;

    for (const auto& [a, rhs] : p_.equalities) {
      auto& row = p.add_row(rhs);
      for (int i = 0; i < n; ++i) {
        if (a(i, i) != 0.0) row.add(entry_index(i, i), a(i, i));
        for (int j = 0; j < i; ++j)
          if (a(i, j) != 0.0) row.add(entry_index(i, j), 2.0 * a(i, j));
      }
    }
    for (int k = 0; k < num_entities(); ++k) {
      const auto& e = p_.integer_entries[k];
      const int col = entry_index(e.i, e.j);
      mc.x_col.push_back(col);
      mc.x_fixed.push_back(0.0);
      auto& lo_row = p.add_row(nb.lo[k]);
      lo_row.add(col, 1.0);
      lo_row.add(slack_base + next_slack++, -1.0);
      auto& hi_row = p.add_row(nb.hi[k]);
      hi_row.add(col, 1.0);
      hi_row.add(slack_base + next_slack++, 1.0);
    }
    for (const auto& cut : pool.linear()) {
      auto& row = p.add_row(0.0);
      for (int i = 0; i < n; ++i) {
        if (cut.T(i, i) != 0.0) row.add(entry_index(i, i), cut.T(i, i));
        for (int j = 0; j < i; ++j)
          if (cut.T(i, j) != 0.0) row.add(entry_index(i, j), 2.0 * cut.T(i, j));
      }
      row.add(slack_base + next_slack++, -1.0);
    }
    for (const auto& cut : pool.rows()) {
      auto& row = p.add_row(cut.rhs);
      for (const auto& [ij, coef] : cut.coef_X) row.add(entry_index(ij.first, ij.second), coef);
      row.add(slack_base + next_slack++, -1.0);
    }
    return mc;
  }

  std::vector<double> extract_x(const MasterConic& mc, const ConicSolution& sol) const {
    std::vector<double> vals;
    vals.reserve(num_entities());
    for (int k = 0; k < num_entities(); ++k) vals.push_back(sol.z[mc.x_col[k]]);
    return vals;
  }

  SymMatrix extract_X(const MasterConic&, const ConicSolution& sol,
                      const std::vector<double>&) const {
    SymMatrix xm(p_.n);
    for (int i = 0; i < p_.n; ++i)
      for (int j = 0; j <= i; ++j) xm.set(i, j, sol.z[entry_index(i, j)]);
    return xm;
  }

 private:
  int entry_index(int i, int j) const {
    if (i < j) std::swap(i, j);
    return j * p_.n - j * (j + 1) / 2 + i;
  }

  const IsdpInstance& p_;
};

// -------------------------------------------------------------------------
// The tree search.
// -------------------------------------------------------------------------
namespace bb_detail {

struct Node {
  NodeBounds bounds;
  double bound;  // inherited lower bound
  int depth;
  long seq;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.seq > b.seq;
  }
};

// best-bound selection with a depth dive every eighth node
template <class Queue>
Node node_select(Queue& open, std::vector<Node>& dive_stack, long processed) {
  const bool dive = (processed % 8) != 0;
  if (dive && !dive_stack.empty()) {
    Node n = dive_stack.back();
    dive_stack.pop_back();
    return n;
  }
  if (!open.empty()) {
    Node n = open.top();
    open.pop();
    return n;
  }
  Node n = dive_stack.back();
  dive_stack.pop_back();
  return n;
}

}  // namespace bb_detail

template <class Master>
MasterResult solve_master(const Master& master, CutPool& pool, const LazyHook& hook,
                          const BranchLimits& limits, double known_upper_bound = kInf) {
  using bb_detail::Node;
  MasterResult res;
  res.bound = -kInf;
  res.value = known_upper_bound;

  std::priority_queue<Node, std::vector<Node>, bb_detail::NodeOrder> open;
  std::vector<Node> dive_stack;
  long seq = 0;
  open.push({master.root_bounds(), -kInf, 0, seq++});
  double incumbent = known_upper_bound;
  double incumbent_bound = known_upper_bound;  // margined bound of the incumbent's node
  bool have_incumbent = false;
  long processed = 0;
  double dirty_bound = kInf;  // bounds of nodes closed without full resolution

  auto prune_tol = [&]() { return 1e-9 * std::max(1.0, std::abs(incumbent)); };

  while (!open.empty() || !dive_stack.empty()) {
    if (limits.deadline.expired()) {
      res.status = MasterStatus::TimeLimit;
      break;
    }
    if (processed >= limits.node_limit) {
      res.status = MasterStatus::NodeLimit;
      break;
    }
    Node node = bb_detail::node_select(open, dive_stack, processed);
    ++processed;
    if (node.bound >= incumbent - prune_tol()) continue;

    // lazy re-solve loop
    bool node_done = false;
    long rounds = 0;
    double node_value = node.bound;
    while (!node_done) {
      if (limits.deadline.expired()) {
        res.status = MasterStatus::TimeLimit;
        node_done = true;
        break;
      }
      MasterConic mc = master.build(node.bounds, pool);
      IpmOptions opts;
      opts.deadline = limits.deadline;
      if (have_incumbent && !hook)
        opts.cutoff = incumbent - mc.objective_offset - prune_tol();
      ConicSolution sol = solve_conic(mc.problem, opts);

      if (sol.status == ConicStatus::PrimalInfeasible) {
        node_done = true;
        break;
      }
      if (sol.status == ConicStatus::Cutoff) {
        node_done = true;
        break;
      }
      if (sol.status == ConicStatus::DualInfeasible) {
        // unbounded relaxation: cannot prune, cannot bound; treat as failure
        ++res.ipm_failures;
        dirty_bound = -kInf;
        node_done = true;
        break;
      }
      if (sol.status != ConicStatus::Optimal) {
        ++res.ipm_failures;
        // split on the first unfixed entity; the children are tighter and
        // usually solve, and the union preserves exactness
        int split = -1;
        for (int i = 0; i < master.num_entities(); ++i)
          if (node.bounds.hi[i] - node.bounds.lo[i] > 0.5) {
            split = i;
            break;
          }
        if (split >= 0) {
          const double mid = std::floor(0.5 * (node.bounds.lo[split] + node.bounds.hi[split]));
          Node lo = node, hi = node;
          lo.bounds.hi[split] = mid;
          hi.bounds.lo[split] = mid + 1.0;
          lo.depth = hi.depth = node.depth + 1;
          lo.seq = seq++;
          hi.seq = seq++;
          dive_stack.push_back(hi);
          open.push(lo);
        } else {
          dirty_bound = std::min(dirty_bound, node.bound);
        }
        node_done = true;
        break;
      }

      node_value = sol.primal_obj + mc.objective_offset;
      // the relaxation bound carries the interior-point tolerance; back it
      // off so downstream sandwich checks at 1e-9 scale stay valid
      const double bound_margin = 1e-8 * std::max(1.0, std::abs(node_value));
      node.bound = std::max(node.bound,
                            std::min(sol.primal_obj, sol.dual_obj) + mc.objective_offset -
                                bound_margin);
      if (node.bound >= incumbent - prune_tol()) {
        node_done = true;
        break;
      }
      std::vector<double> x = master.extract_x(mc, sol);
      bool integral = true;
      for (double v : x)
        if (std::abs(v - std::round(v)) > kIntegralityTol) {
          integral = false;
          break;
        }

      if (!integral) {
        const int bi = branch_index(x);
        const double v = x[bi];
        Node lo = node, hi = node;
        lo.bounds.hi[bi] = std::floor(v);
        hi.bounds.lo[bi] = std::floor(v) + 1.0;
        lo.bound = hi.bound = node.bound;
        lo.depth = hi.depth = node.depth + 1;
        lo.seq = seq++;
        hi.seq = seq++;
        dive_stack.push_back(hi);
        open.push(lo);
        node_done = true;
        break;
      }

      for (double& v : x) v = std::round(v);
      SymMatrix xm = master.extract_X(mc, sol, x);
      if (!hook) {
        if (node_value < incumbent - 1e-15) {
          incumbent = node_value;
          incumbent_bound = node.bound;
          have_incumbent = true;
          res.x = x;
          res.X = std::move(xm);
          res.value = incumbent;
        }
        node_done = true;
        break;
      }

      LazyDecision dec = hook(xm, x, node_value);
      ++res.lazy_rounds;
      bool need_resolve = !dec.accept;
      if (dec.accept) {
        const double exact = dec.exact_value ? *dec.exact_value : node_value;
        if (exact < incumbent - 1e-15) {
          incumbent = exact;
          incumbent_bound = node.bound;
          have_incumbent = true;
          res.x = x;
          res.X = dec.exact_X ? *dec.exact_X : xm;
          res.value = incumbent;
        }
        // close once the relaxation certifies the exact value; otherwise the
        // hook's cuts tighten the node and it is re-solved
        const double close_tol = std::max(1e-9, 5e-7 * std::max(1.0, std::abs(exact)));
        if (exact - node_value <= close_tol) {
          node_done = true;
          break;
        }
        need_resolve = true;
      }
      if (need_resolve) {
        bool any_new = false;
        for (auto& c : dec.lifted_cuts)
          if (pool.insert(std::move(c))) any_new = true;
        for (auto& c : dec.kk_cuts)
          if (pool.insert(std::move(c))) any_new = true;
        for (auto& c : dec.row_cuts)
          if (pool.insert(std::move(c))) any_new = true;
        if (!any_new || ++rounds >= limits.lazy_round_limit_per_node) {
          // no progress possible; keep the node's bound as a dirty bound
          dirty_bound = std::min(dirty_bound, node_value);
          node_done = true;
          break;
        }
      }
    }
    if (res.status == MasterStatus::TimeLimit) break;
  }

  // final bound: open nodes, dirty closures and the incumbent
  double open_bound = kInf;
  while (!open.empty()) {
    open_bound = std::min(open_bound, open.top().bound);
    open.pop();
  }
  for (const auto& nd : dive_stack) open_bound = std::min(open_bound, nd.bound);
  open_bound = std::min(open_bound, dirty_bound);

  res.nodes = processed;
  if (res.status == MasterStatus::TimeLimit || res.status == MasterStatus::NodeLimit) {
    res.bound = std::min(open_bound, incumbent_bound);
    return res;
  }
  if (!have_incumbent) {
    if (open_bound == kInf) {
      res.status = MasterStatus::Infeasible;
      res.bound = kInf;
    } else {
      res.status = MasterStatus::Abort;
      res.bound = open_bound;
    }
    return res;
  }
  res.bound = std::min(open_bound, incumbent_bound);
  res.status = res.bound >= incumbent - std::max(1e-6, 1e-6 * std::abs(incumbent))
                   ? MasterStatus::Optimal
                   : MasterStatus::Abort;
  return res;
}

}  // namespace isdp
