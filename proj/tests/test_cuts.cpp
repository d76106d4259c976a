#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "isdp/cuts.hpp"
#include "isdp/instances.hpp"
#include "isdp/rng.hpp"

using namespace isdp;

namespace {

Matrix seeded_orthogonal(std::uint64_t seed, int n) {
  CounterRng rng(seed, 5);
  Matrix m(n, n);
  std::uint64_t ctr = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = rng.normal(ctr++);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < j; ++k) {
      double dot = 0;
      for (int i = 0; i < n; ++i) dot += m(i, j) * m(i, k);
      for (int i = 0; i < n; ++i) m(i, j) -= dot * m(i, k);
    }
    double nrm = 0;
    for (int i = 0; i < n; ++i) nrm += m(i, j) * m(i, j);
    nrm = std::sqrt(nrm);
    for (int i = 0; i < n; ++i) m(i, j) /= nrm;
  }
  return m;
}

SymMatrix congruence_diag(const Matrix& u, const std::vector<double>& d) {
  const int n = u.rows();
  SymMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = 0;
      for (int k = 0; k < n; ++k) v += u(i, k) * d[k] * u(j, k);
      a.set(i, j, v);
    }
  return a;
}

/// witness feasible points: X = xx^T + PP^T with binary x
struct Witness {
  SymMatrix X;
  std::vector<double> x;
  SymMatrix lifted;
};

Witness random_witness(const CounterRng& rng, int n, std::uint64_t base, bool psd_extra) {
  Witness w;
  w.x.resize(n);
  std::uint64_t ctr = base;
  for (int i = 0; i < n; ++i) w.x[i] = static_cast<double>(rng.bits(ctr++) & 1);
  w.X = SymMatrix::outer(w.x);
  if (psd_extra) {
    const int k = 1 + static_cast<int>(rng.bits(ctr++) % 3);
    for (int col = 0; col < k; ++col) {
      std::vector<double> pcol(n);
      for (int i = 0; i < n; ++i) pcol[i] = rng.normal(ctr++);
      w.X += SymMatrix::outer(pcol);
    }
  }
  w.lifted = lift(w.X, w.x).M;
  return w;
}

}  // namespace

TEST_CASE("initial_polyhedral counts and small cases") {
  auto cuts = initial_polyhedral(1);  // lifted dimension 2
  REQUIRE(cuts.size() == 4);
  // identity satisfies everything
  for (const auto& c : cuts) REQUIRE(inner(c.T, SymMatrix::identity(2)) >= 0.0);
  // the exchange matrix violates the minus-pair cut
  SymMatrix m(2);
  m.set(0, 1, 1.0);
  bool violated = false;
  for (const auto& c : cuts)
    if (inner(c.T, m) < -1e-12) violated = true;
  REQUIRE(violated);

  for (int n : {2, 5, 9}) REQUIRE(initial_polyhedral(n).size() ==
                                  static_cast<std::size_t>((n + 1) * (n + 1)));
}

TEST_CASE("identity_aggregation on BSDP and ISDP instances") {
  BsdpInstance b;
  b.n = 4;
  auto q1 = identity_aggregation(b);
  REQUIRE(q1 == std::vector<double>(4, 1.0));

  IsdpInstance p;
  p.n = 3;
  p.equalities.push_back({SymMatrix::identity(3), 1.0});
  p.equalities.push_back({SymMatrix::diag({1, 2, 3}), 0.0});
  auto q = identity_aggregation(p);
  REQUIRE(q[0] == 1.0);
  REQUIRE(q[1] == 0.0);

  // all traceless constraint matrices cannot reproduce the identity
  IsdpInstance t;
  t.n = 2;
  SymMatrix a(2);
  a.set(0, 0, 1.0);
  a.set(1, 1, -1.0);
  SymMatrix a2(2);
  a2.set(0, 1, 1.0);
  t.equalities.push_back({a, 0.0});
  t.equalities.push_back({a2, 0.0});
  REQUIRE_THROWS_AS(identity_aggregation(t), AggregationError);
}

TEST_CASE("commuting_aggregation returns zero when only the trivial solution exists") {
  // QKP-style: all A_i = 0 commute, but the aggregation vanishes
  BqcqpInstance qkp = gen_qkp(5, 0.8, 3);
  BsdpInstance b = bqcqp_to_bsdp(qkp);
  auto q2 = commuting_aggregation(b);
  for (double v : q2) REQUIRE(v == 0.0);

  // a single strictly non-commuting matrix forces y = 0
  SymMatrix c(2);
  c.set(0, 1, 1.0);
  std::vector<SymMatrix> mats = {SymMatrix::diag({1.0, 2.0})};
  auto q = commuting_aggregation(c, mats);
  REQUIRE(q[0] == 0.0);
}

TEST_CASE("commuting_aggregation finds the constructed commuting pair") {
  Matrix u0 = seeded_orthogonal(11, 4);
  SymMatrix c = congruence_diag(u0, {3, 1, -2, 0.5});
  SymMatrix a1 = congruence_diag(u0, {1, 4, 2, -1});
  SymMatrix a2(4);
  a2.set(0, 1, 1.0);  // does not commute with c
  std::vector<SymMatrix> mats = {a1, a2};
  auto q = commuting_aggregation(c, mats);
  REQUIRE(std::abs(q[0]) > 0.5);
  SymMatrix agg = a1;
  agg *= q[0];
  SymMatrix a2s = a2;
  a2s *= q[1];
  agg += a2s;
  REQUIRE(commutator_norm(c, agg) <=
          1e-8 * std::max(1.0, c.frobenius_norm() * std::max(1.0, agg.frobenius_norm())));
  double qmax = 0;
  for (double v : q) qmax = std::max(qmax, std::abs(v));
  REQUIRE(qmax == Catch::Approx(1.0));
}

TEST_CASE("spectral_seed on a diagonal objective gives coordinate cuts") {
  BqcqpInstance p = gen_qkp(4, 1.0, 7);
  BsdpInstance b = bqcqp_to_bsdp(p);
  // replace the objective with a diagonal one
  b.C = SymMatrix::diag({4.0, 3.0, 2.0, 1.0});
  auto seeds = spectral_seed(b);
  REQUIRE(seeds.size() == 4);
  for (const auto& s : seeds) {
    int nnz = 0;
    for (double v : s.v)
      if (std::abs(v) > 1e-9) ++nnz;
    REQUIRE(nnz == 1);
  }
}

TEST_CASE("seed cuts hold at binary rank-one points") {
  BqcqpInstance p = gen_bls(6, 3, BlsDist::Normal, 5);
  BsdpInstance b = bqcqp_to_bsdp(p);
  auto seeds = spectral_seed(b);
  REQUIRE(seeds.size() == 6);
  for (int mask = 0; mask < 64; ++mask) {
    std::vector<double> x(6);
    for (int i = 0; i < 6; ++i) x[i] = double((mask >> i) & 1);
    SymMatrix xx = SymMatrix::outer(x);
    for (const auto& s : seeds) {
      double vxv = xx.quad_form(s.v);
      double vx = 0;
      for (int i = 0; i < 6; ++i) vx += s.v[i] * x[i];
      REQUIRE(vxv - vx * vx >= -1e-9);
    }
  }
}

TEST_CASE("disaggregate_linear examples") {
  auto c1 = disaggregate_linear(SymMatrix::identity(3));
  REQUIRE(c1.size() == 3);

  SymMatrix rank1 = SymMatrix::outer({0.6, -0.8});
  auto c2 = disaggregate_linear(rank1);
  REQUIRE(c2.size() == 1);

  // lam-weighted reconstruction
  CounterRng rng(3, 9);
  std::vector<double> pv(4);
  SymMatrix s(4);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 4; ++i) pv[i] = rng.normal(static_cast<std::uint64_t>(k) * 16 + i);
    s += SymMatrix::outer(pv);
  }
  EigenDecomposition e = sym_eigen(s);
  SymMatrix rec(4);
  for (int k = 0; k < 4; ++k) {
    if (e.values[k] <= 0) continue;
    SymMatrix term = SymMatrix::outer(e.vectors.col(k));
    term *= e.values[k];
    rec += term;
  }
  REQUIRE((rec - s).frobenius_norm() <= 1e-9 * std::max(1.0, s.frobenius_norm()));
}

TEST_CASE("disaggregate_soc examples") {
  // corner-only certificate produces no cuts
  const int n = 3;
  SymMatrix corner(n + 1);
  corner.set(n, n, 1.0);
  REQUIRE(disaggregate_soc(corner).empty());

  // (e1; 0)(e1; 0)^T becomes the single cut X11 >= x1^2
  std::vector<double> e1(n + 1, 0.0);
  e1[0] = 1.0;
  auto cuts = disaggregate_soc(SymMatrix::outer(e1));
  REQUIRE(cuts.size() == 1);
  REQUIRE(cuts[0].v[0] == Catch::Approx(1.0));
}

TEST_CASE("Lemma-style implication: SOC disaggregation implies the aggregate cut") {
  CounterRng rng(17, 2);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.bits(trial * 977) % 4);
    // random psd certificate on the lifted space
    SymMatrix s(n + 1);
    std::uint64_t ctr = trial * 4096;
    for (int k = 0; k < 2; ++k) {
      std::vector<double> pv(n + 1);
      for (int i = 0; i <= n; ++i) pv[i] = rng.normal(ctr++);
      s += SymMatrix::outer(pv);
    }
    auto cuts = disaggregate_soc(s, 0.0);
    Witness w = random_witness(rng, n, ctr, true);
    bool all_soc_hold = true;
    for (const auto& c : cuts) {
      double vxv = w.X.quad_form(c.v);
      double vx = 0;
      for (int i = 0; i < n; ++i) vx += c.v[i] * w.x[i];
      if (vxv - vx * vx < -1e-12) all_soc_hold = false;
    }
    if (!all_soc_hold) continue;  // hypothesis of the implication
    ++checked;
    REQUIRE(inner(w.lifted, s) >= -1e-7 * std::max(1.0, s.frobenius_norm()));
  }
  REQUIRE(checked > 50);
}

TEST_CASE("kk pairs mode matches the two-by-two minor inequality") {
  const int dim = 3;  // n = 2 lifted
  auto cuts = kk_cuts(dim, KkMode::Pairs);
  REQUIRE(cuts.size() == static_cast<std::size_t>(dim * (dim - 1)));
  CounterRng rng(23, 4);
  for (int trial = 0; trial < 100; ++trial) {
    // random psd M
    SymMatrix m(dim);
    std::uint64_t ctr = trial * 64;
    for (int k = 0; k < 2; ++k) {
      std::vector<double> pv(dim);
      for (int i = 0; i < dim; ++i) pv[i] = rng.normal(ctr++);
      m += SymMatrix::outer(pv);
    }
    for (const auto& c : cuts) {
      auto [r, s, t] = kk_slots(c, m);
      REQUIRE(r >= -1e-9);
      REQUIRE(s >= -1e-9);
      REQUIRE(2.0 * r * s - t * t >= -1e-7 * std::max(1.0, m.frobenius_norm()));
    }
    // minor form: ||(2 M_ij, M_ii - M_jj)|| <= M_ii + M_jj
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < i; ++j) {
        const double lhs = std::hypot(2.0 * m(i, j), m(i, i) - m(j, j));
        REQUIRE(lhs <= m(i, i) + m(j, j) + 1e-7);
      }
  }
}

TEST_CASE("kk certificate mode on the identity degenerates to diagonal cuts") {
  SymMatrix s = SymMatrix::identity(4);
  auto cuts = kk_cuts(4, KkMode::Certificate, &s);
  REQUIRE(cuts.size() == 4);
  for (const auto& c : cuts) {
    int nnz = 0;
    for (double v : c.w)
      if (std::abs(v) > 1e-9) ++nnz;
    REQUIRE(nnz == 1);
    REQUIRE(std::abs(c.w[c.pivot]) == Catch::Approx(1.0));
  }
}

TEST_CASE("cut pool rejects duplicates and invalid cuts") {
  CutPool pool;
  LinearCut c{SymMatrix::identity(3)};
  REQUIRE(pool.insert(c));
  REQUIRE_FALSE(pool.insert(c));

  SocCut v1{{1.0, 0.0}};
  SocCut v2{{-1.0, 0.0}};
  REQUIRE(pool.insert(v1));
  REQUIRE_FALSE(pool.insert(v2));  // +-v give the same cut

  SymMatrix bad = SymMatrix::diag({1.0, -1e-3});
  REQUIRE_THROWS_AS(pool.insert(LinearCut{bad}), CutValidityError);
}

TEST_CASE("universal cut validity on seeded witnesses") {
  CounterRng rng(31, 6);
  const int n = 6;
  BqcqpInstance p = gen_bls(n, 2, BlsDist::Normal, 13);
  BsdpInstance b = bqcqp_to_bsdp(p);

  std::vector<LinearCut> lin = initial_polyhedral(n);
  auto seeds = spectral_seed(b);
  SymMatrix cert(n + 1);
  {
    std::vector<double> pv(n + 1);
    for (int i = 0; i <= n; ++i) pv[i] = rng.normal(1000 + i);
    cert = SymMatrix::outer(pv);
    for (int i = 0; i <= n; ++i) pv[i] = rng.normal(2000 + i);
    cert += SymMatrix::outer(pv);
  }
  auto lin2 = disaggregate_linear(cert);
  auto soc2 = disaggregate_soc(cert);
  auto kkp = kk_cuts(n + 1, KkMode::Pairs);
  auto kkc = kk_cuts(n + 1, KkMode::Certificate, &cert);

  for (int trial = 0; trial < 1000; ++trial) {
    Witness w = random_witness(rng, n, static_cast<std::uint64_t>(trial) * 512, trial % 2 == 0);
    for (const auto& c : lin) REQUIRE(inner(w.lifted, c.T) >= -1e-7);
    for (const auto& c : lin2) REQUIRE(inner(w.lifted, c.T) >= -1e-7);
    for (const auto& c : seeds) {
      double vxv = w.X.quad_form(c.v);
      double vx = 0;
      for (int i = 0; i < n; ++i) vx += c.v[i] * w.x[i];
      REQUIRE(vxv - vx * vx >= -1e-7);
    }
    for (const auto& c : soc2) {
      double vxv = w.X.quad_form(c.v);
      double vx = 0;
      for (int i = 0; i < n; ++i) vx += c.v[i] * w.x[i];
      REQUIRE(vxv - vx * vx >= -1e-7);
    }
    for (const auto& c : kkp) {
      auto [r, s, t] = kk_slots(c, w.lifted);
      REQUIRE(2.0 * r * s - t * t >= -1e-7 * std::max(1.0, w.lifted.frobenius_norm()));
    }
    for (const auto& c : kkc) {
      auto [r, s, t] = kk_slots(c, w.lifted);
      REQUIRE(2.0 * r * s - t * t >= -1e-7 * std::max(1.0, w.lifted.frobenius_norm()));
    }
  }
}

TEST_CASE("no_good_cut excludes exactly its point") {
  std::vector<double> x = {1.0, 0.0, 1.0};
  RowCut cut = no_good_cut(x);
  auto eval = [&](const std::vector<double>& p) {
    double lhs = 0;
    for (const auto& [i, c] : cut.coef_x) lhs += c * p[i];
    return lhs >= cut.rhs;
  };
  REQUIRE_FALSE(eval(x));
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<double> p = {double(mask & 1), double((mask >> 1) & 1), double((mask >> 2) & 1)};
    if (p == x) continue;
    REQUIRE(eval(p));
  }
}
