#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "isdp/bb.hpp"
#include "isdp/instances.hpp"
#include "isdp/oa.hpp"

using namespace isdp;

namespace {

BsdpInstance one_item_qkp() {
  // max 5 x^2 subject to x <= 1 capacity: stored min form C = [[-5]]
  BqcqpInstance p;
  p.n = 1;
  p.C = SymMatrix(1);
  p.C.set(0, 0, -5.0);
  p.d0 = {0.0};
  QuadConstraint knap;
  knap.A = SymMatrix(1);
  knap.d = {0.5};
  knap.b = 1.0;
  p.constraints.push_back(knap);
  p.sense = Sense::Max;
  return bqcqp_to_bsdp(p);
}

}  // namespace

TEST_CASE("branch index selection") {
  REQUIRE(branch_index({0.5, 0.2}) == 0);
  REQUIRE(branch_index({0.4, 0.6}) == 0);  // tie broken to the smaller index
  REQUIRE(branch_index({0.9, 0.45}) == 1);
  REQUIRE_THROWS_AS(branch_index({1.0, 0.0}), std::logic_error);
}

TEST_CASE("single item master solves by enumeration") {
  BsdpInstance b = one_item_qkp();
  CutPool pool;
  for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
  BsdpMaster master(b, false);
  MasterResult mr = solve_master(master, pool, LazyHook{}, BranchLimits{}, kInf);
  REQUIRE(mr.status == MasterStatus::Optimal);
  REQUIRE(mr.x == std::vector<double>{1.0});
  REQUIRE(mr.value == Catch::Approx(-5.0).margin(1e-6));
}

TEST_CASE("no-good cut excluding the only feasible point gives infeasible") {
  BsdpInstance b = one_item_qkp();
  // tighten capacity so only x = 0 and x = 1 are feasible, then exclude both
  CutPool pool;
  for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
  pool.insert(no_good_cut({0.0}));
  pool.insert(no_good_cut({1.0}));
  BsdpMaster master(b, false);
  MasterResult mr = solve_master(master, pool, LazyHook{}, BranchLimits{}, kInf);
  REQUIRE(mr.status == MasterStatus::Infeasible);
}

TEST_CASE("integral root closes in one node") {
  // diagonal objective with no coupling: the relaxation is integral at the root
  BqcqpInstance p;
  p.n = 2;
  p.C = SymMatrix::diag({1.0, 2.0});  // min sense: x = 0 optimal
  p.d0 = {0.0, 0.0};
  BsdpInstance b = bqcqp_to_bsdp(p);
  CutPool pool;
  for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
  BsdpMaster master(b, false);
  MasterResult mr = solve_master(master, pool, LazyHook{}, BranchLimits{}, kInf);
  REQUIRE(mr.status == MasterStatus::Optimal);
  REQUIRE(mr.nodes == 1);
  REQUIRE(mr.value == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("hook soundness: valid cuts never prune the planted optimum") {
  // QKP where one dominant item is the unique optimum
  BqcqpInstance p;
  p.n = 3;
  p.C = SymMatrix::diag({-100.0, -1.0, -1.0});
  p.d0 = {0, 0, 0};
  QuadConstraint knap;
  knap.A = SymMatrix(3);
  knap.d = {0.5, 0.5, 0.5};
  knap.b = 1.0;  // capacity admits exactly one item
  p.constraints.push_back(knap);
  p.sense = Sense::Max;
  BsdpInstance b = bqcqp_to_bsdp(p);

  CutPool pool;
  for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
  BsdpMaster master(b, false);
  int hook_calls = 0;
  LazyHook hook = [&](const SymMatrix& xm, const std::vector<double>& x, double node_value) {
    (void)node_value;
    ++hook_calls;
    LazyDecision dec;
    LiftedMatrix l = lift(xm, x);
    auto [lam, w] = min_eig(l.M);
    if (lam < -1e-7) {
      dec.accept = false;
      dec.lifted_cuts.push_back({SymMatrix::outer(w)});
      return dec;
    }
    dec.accept = true;
    dec.exact_value = b.min_objective_at(x);
    dec.exact_X = SymMatrix::outer(x);
    return dec;
  };
  MasterResult mr = solve_master(master, pool, hook, BranchLimits{}, kInf);
  REQUIRE(mr.status == MasterStatus::Optimal);
  REQUIRE(hook_calls >= 1);
  REQUIRE(mr.value == Catch::Approx(-100.0).margin(1e-6));
  REQUIRE(mr.x[0] == 1.0);
}

TEST_CASE("node limit returns the best incumbent and a valid bound") {
  BqcqpInstance p = gen_qkp(10, 0.8, 3);
  BsdpInstance b = bqcqp_to_bsdp(p);
  CutPool pool;
  for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
  BsdpMaster master(b, false);
  BranchLimits limits;
  limits.node_limit = 3;
  MasterResult mr = solve_master(master, pool, LazyHook{}, limits, kInf);
  REQUIRE(mr.status == MasterStatus::NodeLimit);
  REQUIRE(mr.bound <= mr.value + 1e-9);
}

TEST_CASE("master exactness against brute force on small instances") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    BqcqpInstance p = gen_qkp(7, 0.6, seed);
    BsdpInstance b = bqcqp_to_bsdp(p);
    BruteForceResult bf = brute_force(p);

    // full closure via the lazy PSD hook: the master then solves the BSDP
    CutPool pool;
    for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
    BsdpMaster master(b, false);
    LazyHook hook = [&](const SymMatrix& xm, const std::vector<double>& x, double node_value) {
      LazyDecision dec;
      LiftedMatrix l = lift(xm, x);
      auto [lam, w] = min_eig(l.M);
      const double exact = b.min_objective_at(x);
      if (lam < -1e-7 && exact - node_value > 1e-7 * std::max(1.0, std::abs(exact))) {
        dec.accept = false;
        dec.lifted_cuts.push_back({SymMatrix::outer(w)});
        return dec;
      }
      dec.accept = true;
      dec.exact_value = exact;
      dec.exact_X = SymMatrix::outer(x);
      return dec;
    };
    MasterResult mr = solve_master(master, pool, hook, BranchLimits{}, kInf);
    CAPTURE(seed);
    REQUIRE(mr.status == MasterStatus::Optimal);
    REQUIRE(-mr.value == Catch::Approx(bf.value).margin(1e-6 * std::max(1.0, std::abs(bf.value))));
  }
}

TEST_CASE("bound monotonicity along the node sequence") {
  // the global bound after processing is below every later value
  BqcqpInstance p = gen_bls(8, 3, BlsDist::Normal, 1);
  BsdpInstance b = bqcqp_to_bsdp(p);
  CutPool pool;
  for (auto& c : initial_polyhedral(b.n)) pool.insert(std::move(c));
  BsdpMaster master(b, false);
  MasterResult mr = solve_master(master, pool, LazyHook{}, BranchLimits{}, kInf);
  REQUIRE(mr.status == MasterStatus::Optimal);
  REQUIRE(mr.bound <= mr.value + 1e-9 * std::max(1.0, std::abs(mr.value)));
  REQUIRE(mr.value - mr.bound <= std::max(1e-6, 1e-6 * std::abs(mr.value)));
}
