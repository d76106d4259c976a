#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "isdp/io.hpp"
#include "isdp/model.hpp"
#include "isdp/rng.hpp"

using namespace isdp;

namespace {

BqcqpInstance tiny_qkp() {
  // max x^T C x, w = (1,1), c = 1; stored negated with the knapsack row as a
  // pure linear constraint (A = 0, 2 d^T x = w^T x)
  BqcqpInstance p;
  p.n = 2;
  p.C = SymMatrix(2);
  p.C.set(0, 0, -3.0);
  p.C.set(1, 1, -2.0);
  p.C.set(0, 1, -1.0);
  p.d0 = {0.0, 0.0};
  QuadConstraint knap;
  knap.A = SymMatrix(2);
  knap.d = {0.5, 0.5};
  knap.b = 1.0;
  knap.rel = Relation::LessEqual;
  p.constraints.push_back(knap);
  p.sense = Sense::Max;
  return p;
}

bool structurally_equal(const BqcqpInstance& a, const BqcqpInstance& b) {
  if (a.n != b.n || a.sense != b.sense) return false;
  if ((a.C - b.C).frobenius_norm() != 0.0) return false;
  if (a.d0 != b.d0) return false;
  if (a.constraints.size() != b.constraints.size()) return false;
  for (std::size_t k = 0; k < a.constraints.size(); ++k) {
    const auto &ca = a.constraints[k], &cb = b.constraints[k];
    if ((ca.A - cb.A).frobenius_norm() != 0.0 || ca.d != cb.d || ca.b != cb.b ||
        ca.rel != cb.rel)
      return false;
  }
  if (a.lin.rows != b.lin.rows || a.lin.a != b.lin.a || a.lin.t != b.lin.t) return false;
  return true;
}

}  // namespace

TEST_CASE("bqcqp_to_bsdp carries data and doubles constraint linear terms") {
  BqcqpInstance p = tiny_qkp();
  BsdpInstance b = bqcqp_to_bsdp(p);
  REQUIRE(b.n == 2);
  REQUIRE(b.sense == Sense::Max);
  REQUIRE((b.C - p.C).frobenius_norm() == 0.0);
  REQUIRE(b.constraints.size() == 1);
  // knapsack row reads w^T x <= c in the lifted problem
  REQUIRE(b.constraints[0].d[0] == 1.0);
  REQUIRE(b.constraints[0].d[1] == 1.0);
  REQUIRE(b.constraints[0].b == 1.0);
  REQUIRE(b.constraints[0].A.frobenius_norm() == 0.0);

  // equivalence at binary points: lifted value matches the quadratic form
  for (int mask = 0; mask < 4; ++mask) {
    std::vector<double> x = {double(mask & 1), double((mask >> 1) & 1)};
    REQUIRE(b.min_objective_at(x) == Catch::Approx(p.sign() * p.user_objective(x)));
    REQUIRE(b.point_feasible(x) == p.feasible(x));
  }
}

TEST_CASE("bqcqp_to_bsdp BLS shape") {
  // least squares with b = 0: C = A^T A, d0 = 0, one cardinality row
  BqcqpInstance p;
  p.n = 3;
  p.C = SymMatrix::outer({1.0, 2.0, -1.0});  // rank-1 Gram stand-in
  p.d0 = {0, 0, 0};
  p.lin.resize(1, 3);
  p.lin.at(0, 0) = p.lin.at(0, 1) = p.lin.at(0, 2) = 1.0;
  p.lin.t[0] = 2.0;
  BsdpInstance b = bqcqp_to_bsdp(p);
  REQUIRE(b.constraints.empty());
  REQUIRE(b.lin.rows == 1);
  REQUIRE(b.d0 == std::vector<double>{0, 0, 0});
}

TEST_CASE("bqcqp_to_bsdp with no constraints") {
  BqcqpInstance p;
  p.n = 2;
  p.C = SymMatrix::identity(2);
  p.d0 = {0, 0};
  BsdpInstance b = bqcqp_to_bsdp(p);
  REQUIRE(b.constraints.empty());
  REQUIRE(b.lin.rows == 0);
}

TEST_CASE("lift and unlift round trip") {
  SymMatrix x_mat(2);
  std::vector<double> x = {1.0, 0.0};
  x_mat.set(0, 0, 1.0);
  LiftedMatrix l = lift(x_mat, x);
  REQUIRE(l.M.dim() == 3);
  REQUIRE(l.M(2, 2) == 1.0);
  auto [x2, v2] = unlift(l);
  REQUIRE((x2 - x_mat).frobenius_norm() == 0.0);
  REQUIRE(v2 == x);
}

TEST_CASE("lift PSD characterization") {
  // X=0, x=0: rank-one corner matrix, psd
  LiftedMatrix l0 = lift(SymMatrix(2), {0, 0});
  REQUIRE(is_psd(l0.M, 1e-9));

  // X = xx^T: rank one, psd
  SymMatrix xx = SymMatrix::outer({1.0, 0.0});
  LiftedMatrix l1 = lift(xx, {1.0, 0.0});
  REQUIRE(is_psd(l1.M, 1e-9));

  // X = 0 with x = e_1: 2x2 principal minor [[0,1],[1,1]] has det -1
  LiftedMatrix l2 = lift(SymMatrix(2), {1.0, 0.0});
  REQUIRE_FALSE(is_psd(l2.M, 1e-9));
}

TEST_CASE("unlift rejects corners away from one") {
  LiftedMatrix l{SymMatrix(3)};
  l.M.set(2, 2, 0.5);
  REQUIRE_THROWS_AS(unlift(l), std::invalid_argument);
}

TEST_CASE("emit/parse round trip on a QKP instance") {
  BqcqpInstance p = tiny_qkp();
  std::string text = emit_instance(p);
  auto parsed = parse_instance(text);
  REQUIRE(std::holds_alternative<BqcqpInstance>(parsed));
  REQUIRE(structurally_equal(std::get<BqcqpInstance>(parsed), p));
}

TEST_CASE("round trip on seeded random instances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed, 11);
    std::uint64_t ctr = 0;
    BqcqpInstance p;
    p.n = 2 + static_cast<int>(rng.uniform_int(ctr++, 0, 6));
    p.C = SymMatrix(p.n);
    for (int i = 0; i < p.n; ++i)
      for (int j = 0; j <= i; ++j)
        if (rng.uniform(ctr++) < 0.6) p.C.set(i, j, rng.normal(ctr++) * 3.7);
    p.d0.assign(p.n, 0.0);
    for (int i = 0; i < p.n; ++i)
      if (rng.uniform(ctr++) < 0.5) p.d0[i] = rng.normal(ctr++);
    const int r = static_cast<int>(rng.uniform_int(ctr++, 0, 3));
    for (int k = 0; k < r; ++k) {
      QuadConstraint c;
      c.A = SymMatrix(p.n);
      c.d.assign(p.n, 0.0);
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j <= i; ++j)
          if (rng.uniform(ctr++) < 0.3) c.A.set(i, j, rng.normal(ctr++));
      for (int i = 0; i < p.n; ++i)
        if (rng.uniform(ctr++) < 0.4) c.d[i] = rng.normal(ctr++);
      c.b = rng.normal(ctr++) * 10;
      c.rel = rng.uniform(ctr++) < 0.5 ? Relation::LessEqual : Relation::Equal;
      p.constraints.push_back(std::move(c));
    }
    const int q = static_cast<int>(rng.uniform_int(ctr++, 0, 2));
    p.lin.resize(q, p.n);
    for (int row = 0; row < q; ++row) {
      for (int i = 0; i < p.n; ++i)
        if (rng.uniform(ctr++) < 0.7) p.lin.at(row, i) = rng.normal(ctr++);
      p.lin.t[row] = rng.normal(ctr++);
    }
    p.sense = rng.uniform(ctr++) < 0.5 ? Sense::Min : Sense::Max;

    auto parsed = parse_instance(emit_instance(p));
    REQUIRE(std::holds_alternative<BqcqpInstance>(parsed));
    CAPTURE(seed);
    REQUIRE(structurally_equal(std::get<BqcqpInstance>(parsed), p));
  }
}

TEST_CASE("ISDP round trip") {
  IsdpInstance p;
  p.n = 3;
  p.C = SymMatrix::diag({1, -2, 0.5});
  p.equalities.push_back({SymMatrix::identity(3), 2.0});
  p.integer_entries.push_back({0, 0, 0.0, 3.0});
  p.integer_entries.push_back({0, 2, -1.0, 1.0});
  auto parsed = parse_instance(emit_instance(p));
  REQUIRE(std::holds_alternative<IsdpInstance>(parsed));
  const auto& q = std::get<IsdpInstance>(parsed);
  REQUIRE(q.n == 3);
  REQUIRE(q.equalities.size() == 1);
  REQUIRE(q.integer_entries.size() == 2);
  REQUIRE(q.integer_entries[1].lo == -1.0);
}

TEST_CASE("parse errors carry kind and line number") {
  REQUIRE_THROWS_AS(parse_instance("nonsense\n"), ParseError);
  try {
    parse_instance("bsdp1 n=2 r=0 q=0 sense=sideways\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    REQUIRE(e.kind() == ParseErrorKind::MalformedHeader);
    REQUIRE(e.line() == 1);
  }

  // empty constraint section parses to r = 0
  auto ok = parse_instance("bsdp1 n=2 r=0 q=0 sense=min\nC 1 1 1.5\n");
  REQUIRE(std::get<BqcqpInstance>(ok).constraints.empty());

  try {
    parse_instance("bsdp1 n=3 r=0 q=0 sense=min\n\nC 1 4 1.0\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    REQUIRE(e.kind() == ParseErrorKind::IndexOutOfRange);
    REQUIRE(e.line() == 3);
  }

  try {
    parse_instance("bsdp1 n=2 r=1 q=0 sense=min\ncon 1 rhs 1.0 ge\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    REQUIRE(e.kind() == ParseErrorKind::UnknownRelation);
    REQUIRE(e.line() == 2);
  }

  try {
    parse_instance("bsdp1 n=2 r=0 q=0 sense=min\nC 1 2 1.0\nC 1 2 2.0\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    REQUIRE(e.kind() == ParseErrorKind::DuplicateEntry);
    REQUIRE(e.line() == 3);
  }

  try {
    parse_instance("bsdp1 n=2 r=1 q=0 sense=min\ncon 1 A 1 1 1.0\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    REQUIRE(e.kind() == ParseErrorKind::DimensionMismatch);
  }
}

TEST_CASE("numeric round trip at 17 significant digits") {
  BqcqpInstance p;
  p.n = 1;
  p.C = SymMatrix(1);
  p.C.set(0, 0, 0.1 + 0.2);  // not exactly representable as 0.3
  p.d0 = {1.0 / 3.0};
  auto parsed = std::get<BqcqpInstance>(parse_instance(emit_instance(p)));
  REQUIRE(parsed.C(0, 0) == p.C(0, 0));
  REQUIRE(parsed.d0[0] == p.d0[0]);
}

TEST_CASE("feasibility witness: binary x with X = xx^T satisfies the lifted constraints") {
  BqcqpInstance p = tiny_qkp();
  BsdpInstance b = bqcqp_to_bsdp(p);
  for (int mask = 0; mask < 4; ++mask) {
    std::vector<double> x = {double(mask & 1), double((mask >> 1) & 1)};
    if (!b.point_feasible(x)) continue;
    LiftedMatrix l = lift(SymMatrix::outer(x), x);
    REQUIRE(is_psd(l.M, 1e-9));
    for (int i = 0; i < b.n; ++i) REQUIRE(l.M(i, i) == Catch::Approx(x[i]));
  }
}
