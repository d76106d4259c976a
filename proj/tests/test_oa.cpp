#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "isdp/instances.hpp"
#include "isdp/oa.hpp"

using namespace isdp;

namespace {

void check_monotone_records(const SolveReport& rep) {
  double prev_lb = -kInf, prev_ub = kInf;
  for (const auto& rec : rep.records) {
    const double scale = std::max(1.0, std::abs(rec.ub == kInf ? rec.lb : rec.ub));
    REQUIRE(rec.lb >= prev_lb - 1e-9 * scale);
    REQUIRE(rec.ub <= prev_ub + 1e-9 * scale);
    if (rec.lb > -kInf && rec.ub < kInf) REQUIRE(rec.lb <= rec.ub + 1e-9 * scale);
    prev_lb = std::max(prev_lb, rec.lb);
    prev_ub = std::min(prev_ub, rec.ub);
  }
}

}  // namespace

TEST_CASE("gap_test examples") {
  REQUIRE(gap_test(5.0, 5.0, 1e-6));
  REQUIRE_FALSE(gap_test(0.0, 1.0, 1e-6));
  REQUIRE(gap_test(99.9999999, 100.0, 1e-6));  // 1e-9 relative
}

TEST_CASE("anti-cycle guard records and fires on revisits") {
  AntiCycleGuard guard;
  std::vector<double> x = {1.0, 0.0, 1.0};
  REQUIRE_FALSE(guard.observe(x).has_value());
  auto ng = guard.observe(x);
  REQUIRE(ng.has_value());
  // the emitted row excludes exactly x
  double lhs = 0;
  for (const auto& [i, c] : ng->coef_x) lhs += c * x[i];
  REQUIRE(lhs < ng->rhs);
}

TEST_CASE("run_oa handles the single-variable knapsack with zero capacity") {
  BqcqpInstance p;
  p.n = 1;
  p.C = SymMatrix(1);
  p.C.set(0, 0, -5.0);
  p.d0 = {0.0};
  QuadConstraint knap;
  knap.A = SymMatrix(1);
  knap.d = {0.5};
  knap.b = 0.0;  // only x = 0 feasible
  p.constraints.push_back(knap);
  p.sense = Sense::Max;
  BsdpInstance b = bqcqp_to_bsdp(p);
  SolveReport rep = run_oa(b);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.value == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(rep.x == std::vector<double>{0.0});
}

TEST_CASE("integral PSD-feasible root terminates in one iteration") {
  BqcqpInstance p;
  p.n = 2;
  p.C = SymMatrix::diag({1.0, 2.0});
  p.d0 = {0.0, 0.0};
  BsdpInstance b = bqcqp_to_bsdp(p);
  SolveReport rep = run_oa(b);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.iterations == 1);
  REQUIRE(rep.gap <= 1e-7);
}

TEST_CASE("run_oa matches brute force on BLS") {
  BqcqpInstance p = gen_bls(10, 3, BlsDist::Normal, 42);
  BsdpInstance b = bqcqp_to_bsdp(p);
  BruteForceResult bf = brute_force(p);
  SolveReport rep = run_oa(b);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.value == Catch::Approx(bf.value).margin(1e-6 * std::max(1.0, std::abs(bf.value))));
  check_monotone_records(rep);
}

TEST_CASE("run_oa_soc on diagonal objectives matches brute force quickly") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    BqcqpInstance p = gen_qkp(9, 0.7, seed);
    BsdpInstance b = bqcqp_to_bsdp(p);
    BruteForceResult bf = brute_force(p);
    SolveReport rep = run_oa_soc(b);
    CAPTURE(seed);
    REQUIRE(rep.status == SolveStatus::Optimal);
    REQUIRE(rep.value ==
            Catch::Approx(bf.value).margin(1e-6 * std::max(1.0, std::abs(bf.value))));
    check_monotone_records(rep);
  }
}

TEST_CASE("cut modes agree") {
  BqcqpInstance p = gen_qkp(8, 0.5, 11);
  BsdpInstance b = bqcqp_to_bsdp(p);
  BruteForceResult bf = brute_force(p);
  for (CutMode mode : {CutMode::Aggregate, CutMode::Linear, CutMode::Soc, CutMode::Kk}) {
    SolveReport rep = run_oa_soc(b, 1e-6, {}, mode);
    CAPTURE(static_cast<int>(mode));
    REQUIRE(rep.status == SolveStatus::Optimal);
    REQUIRE(rep.value ==
            Catch::Approx(bf.value).margin(1e-6 * std::max(1.0, std::abs(bf.value))));
  }
}

TEST_CASE("run_lazy_soc agrees with run_oa_soc") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    BqcqpInstance p = gen_bls(9, 3, BlsDist::Normal, seed + 100);
    BsdpInstance b = bqcqp_to_bsdp(p);
    SolveReport r1 = run_oa_soc(b);
    SolveReport r2 = run_lazy_soc(b);
    CAPTURE(seed);
    REQUIRE(r1.status == SolveStatus::Optimal);
    REQUIRE(r2.status == SolveStatus::Optimal);
    REQUIRE(r1.value ==
            Catch::Approx(r2.value).margin(1e-6 * std::max(1.0, std::abs(r1.value))));
    check_monotone_records(r2);
  }
}

TEST_CASE("planted dominant item is found by the lazy algorithm") {
  BqcqpInstance p;
  p.n = 4;
  p.C = SymMatrix::diag({-50.0, -1.0, -2.0, -1.5});
  p.d0 = {0, 0, 0, 0};
  QuadConstraint knap;
  knap.A = SymMatrix(4);
  knap.d = {0.5, 0.5, 0.5, 0.5};
  knap.b = 1.0;
  p.constraints.push_back(knap);
  p.sense = Sense::Max;
  BsdpInstance b = bqcqp_to_bsdp(p);
  SolveReport rep = run_lazy_soc(b);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.value == Catch::Approx(50.0).margin(1e-6));
  REQUIRE(rep.x[0] == 1.0);
}

TEST_CASE("lazy runs add no cuts when every node matrix is already psd") {
  // unconstrained diagonal minimization: optimum x = 0, X = 0
  BqcqpInstance p;
  p.n = 3;
  p.C = SymMatrix::diag({1.0, 1.0, 1.0});
  p.d0 = {0, 0, 0};
  BsdpInstance b = bqcqp_to_bsdp(p);
  SolveReport rep = run_lazy_soc(b);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.value == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("max-sense reporting flips values and bounds") {
  BqcqpInstance p = gen_qkp(6, 0.8, 5);
  BsdpInstance b = bqcqp_to_bsdp(p);
  BruteForceResult bf = brute_force(p);
  SolveReport rep = run_oa_soc(b);
  REQUIRE(rep.sense == Sense::Max);
  REQUIRE(rep.value == Catch::Approx(bf.value).margin(1e-6 * std::max(1.0, bf.value)));
  REQUIRE(rep.bound >= rep.value - 1e-6 * std::max(1.0, std::abs(rep.value)));
}

TEST_CASE("infeasible instances are reported infeasible") {
  BqcqpInstance p;
  p.n = 2;
  p.C = SymMatrix::identity(2);
  p.d0 = {0, 0};
  p.lin.resize(1, 2);
  p.lin.at(0, 0) = 1.0;
  p.lin.at(0, 1) = 1.0;
  p.lin.t[0] = 5.0;  // unattainable over {0,1}^2
  BsdpInstance b = bqcqp_to_bsdp(p);
  for (auto rep : {run_oa(b), run_oa_soc(b), run_lazy_soc(b)})
    REQUIRE(rep.status == SolveStatus::Infeasible);
}

TEST_CASE("time limit zero reports immediately with sentinel bounds") {
  BqcqpInstance p = gen_qkp(8, 0.5, 1);
  BsdpInstance b = bqcqp_to_bsdp(p);
  OaLimits lim;
  lim.time_limit_s = 0.0;
  SolveReport rep = run_oa(b, 1e-6, lim);
  REQUIRE(rep.status == SolveStatus::TimeLimit);
  REQUIRE(rep.bound == kInf);  // max sense: no proof bound yet
  REQUIRE(rep.value == -kInf);
}

TEST_CASE("quadratic constraints make master assignments infeasible for the inner problem") {
  // x1 + x2 <= 1 expressed with the quadratic form x^T J x (J all-ones):
  // binary points with both entries set violate it while the master's lifted
  // relaxation can still propose them
  BqcqpInstance p;
  p.n = 2;
  p.C = SymMatrix(2);
  p.C.set(0, 0, -3.0);
  p.C.set(1, 1, -2.0);
  p.C.set(0, 1, -4.0);
  p.d0 = {0.0, 0.0};
  QuadConstraint q;
  q.A = SymMatrix(2);
  q.A.set(0, 0, 1.0);
  q.A.set(1, 1, 1.0);
  q.A.set(0, 1, 1.0);
  q.d = {0.0, 0.0};
  q.b = 1.0;  // x^T J x <= 1 excludes x = (1,1)
  p.constraints.push_back(q);
  p.sense = Sense::Max;
  BsdpInstance b = bqcqp_to_bsdp(p);
  BruteForceResult bf = brute_force(p);
  REQUIRE(bf.value == 3.0);  // x = (1,0)
  for (auto rep : {run_oa(b), run_oa_soc(b), run_lazy_soc(b)}) {
    REQUIRE(rep.status == SolveStatus::Optimal);
    REQUIRE(rep.value == Catch::Approx(3.0).margin(1e-6));
  }
}

TEST_CASE("iteration count is bounded on a tiny exhaustive instance") {
  BqcqpInstance p = gen_qkp(3, 1.0, 9);
  BsdpInstance b = bqcqp_to_bsdp(p);
  SolveReport rep = run_oa(b);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.iterations <= 9);  // at most one visit + revisit per assignment
}

TEST_CASE("no assignment appears in three distinct iterations") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    BqcqpInstance p = gen_qkp(8, 0.8, seed);
    BsdpInstance b = bqcqp_to_bsdp(p);
    SolveReport rep = run_oa(b);
    REQUIRE(rep.status == SolveStatus::Optimal);
    std::map<std::string, int> counts;
    for (const auto& rec : rep.records) ++counts[rec.assignment];
    for (const auto& [key, cnt] : counts) {
      CAPTURE(seed, key);
      REQUIRE(cnt <= 2);
    }
  }
}

TEST_CASE("general ISDP outer approximation on a hand-checkable instance") {
  // min <C,X> s.t. tr(X) = 3, X psd, X11 integer in [1,2]. Slicing at
  // X11 = a gives X = [[a, t],[t, 3-a]] with t^2 <= a(3-a); the objective
  // a - (3-a) + t is minimized at t = -sqrt(a(3-a)):
  //   f(1) = -1 - sqrt(2),  f(2) = 1 - sqrt(2);  optimum at X11 = 1.
  IsdpInstance p;
  p.n = 2;
  p.C = SymMatrix(2);
  p.C.set(0, 0, 1.0);
  p.C.set(1, 1, -1.0);
  p.C.set(0, 1, 0.5);
  p.equalities.push_back({SymMatrix::identity(2), 3.0});
  p.integer_entries.push_back({0, 0, 1.0, 2.0});
  SolveReport rep = run_oa(p);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.value == Catch::Approx(-1.0 - std::sqrt(2.0)).margin(1e-5));
}
