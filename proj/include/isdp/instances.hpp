#pragma once

// Seeded benchmark families and a brute-force oracle.
//
// Boolean least squares: min ||Ax||^2 with A 10 x n (normal or binary
// entries), cardinality row sum(x) = k (or <= k via CardRelation).
// Quadratic knapsack: max x^T C x with integer profits, density Delta,
// weights in {1..50}, capacity floor(sum(w)/2).

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "isdp/model.hpp"
#include "isdp/rng.hpp"

namespace isdp {

enum class GeneratorFamily { BlsNormal, BlsBinary, Qkp };
enum class CardRelation { LessEqual, Equal };

struct GeneratorSpec {
  GeneratorFamily family = GeneratorFamily::BlsNormal;
  int n = 10;
  double param = 3;  // k for BLS, Delta for QKP
  std::uint64_t seed = 0;
};

enum class BlsDist { Normal, Binary };

inline BqcqpInstance gen_bls(int n, int k, BlsDist dist, std::uint64_t seed,
                             CardRelation card = CardRelation::Equal) {
  if (k > n) throw std::invalid_argument("gen_bls: k > n");
  const int m = 10;
  CounterRng rng(seed, dist == BlsDist::Normal ? 1 : 2);
  std::vector<double> a(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const std::uint64_t ctr = static_cast<std::uint64_t>(i) * n + j;
      a[static_cast<std::size_t>(i) * n + j] =
          dist == BlsDist::Normal ? rng.normal(ctr) : static_cast<double>(rng.bits(ctr) & 1);
    }

  BqcqpInstance p;
  p.n = n;
  p.C = SymMatrix(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = 0;
      for (int r = 0; r < m; ++r)
        v += a[static_cast<std::size_t>(r) * n + i] * a[static_cast<std::size_t>(r) * n + j];
      p.C.set(i, j, v);
    }
  p.d0.assign(n, 0.0);
  p.sense = Sense::Min;
  if (card == CardRelation::Equal) {
    p.lin.resize(1, n);
    for (int j = 0; j < n; ++j) p.lin.at(0, j) = 1.0;
    p.lin.t[0] = k;
  } else {
    QuadConstraint c;
    c.A = SymMatrix(n);
    c.d.assign(n, 0.5);  // 2 d^T x = sum(x)
    c.b = k;
    c.rel = Relation::LessEqual;
    p.constraints.push_back(std::move(c));
  }
  return p;
}

inline BqcqpInstance gen_qkp(int n, double delta, std::uint64_t seed) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("gen_qkp: delta outside (0,1]");
  CounterRng rng(seed, 3);
  std::vector<double> w(n);
  long wsum = 0;
  for (int j = 0; j < n; ++j) {
    w[j] = static_cast<double>(rng.uniform_int(j, 1, 50));
    wsum += static_cast<long>(w[j]);
  }
  BqcqpInstance p;
  p.n = n;
  p.C = SymMatrix(n);
  // each unordered pair gets a decision draw and a value draw at fixed counters
  std::uint64_t pair_base = 1000000;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const std::uint64_t pair_idx = pair_base + 2 * (static_cast<std::uint64_t>(i) * n + j);
      if (rng.uniform(pair_idx) < delta)
        p.C.set(i, j, -static_cast<double>(rng.uniform_int(pair_idx + 1, 1, 100)));
    }
  p.d0.assign(n, 0.0);
  p.sense = Sense::Max;  // objective stored negated
  QuadConstraint knap;
  knap.A = SymMatrix(n);
  knap.d.assign(n, 0.0);
  for (int j = 0; j < n; ++j) knap.d[j] = w[j] / 2.0;  // 2 d^T x = w^T x
  knap.b = static_cast<double>(wsum / 2);
  knap.rel = Relation::LessEqual;
  p.constraints.push_back(std::move(knap));
  return p;
}

inline BqcqpInstance generate(const GeneratorSpec& spec, CardRelation card = CardRelation::Equal) {
  switch (spec.family) {
    case GeneratorFamily::BlsNormal:
      return gen_bls(spec.n, static_cast<int>(spec.param), BlsDist::Normal, spec.seed, card);
    case GeneratorFamily::BlsBinary:
      return gen_bls(spec.n, static_cast<int>(spec.param), BlsDist::Binary, spec.seed, card);
    case GeneratorFamily::Qkp:
      return gen_qkp(spec.n, spec.param, spec.seed);
  }
  throw std::logic_error("unknown family");
}

struct BruteForceResult {
  bool feasible = false;
  double value = 0.0;  // user sense
  std::vector<double> x;
};

/// Exhaustive enumeration over {0,1}^n; ties resolved to the
/// lexicographically smallest argmin. Hard cap n <= 25.
inline BruteForceResult brute_force(const BqcqpInstance& p) {
  if (p.n > 25) throw std::invalid_argument("brute_force: n exceeds the 2^25 cap");
  BruteForceResult best;
  std::vector<double> x(p.n);
  const double sg = p.sign();
  for (std::uint64_t mask = 0; mask < (1ULL << p.n); ++mask) {
    for (int i = 0; i < p.n; ++i) x[i] = static_cast<double>((mask >> i) & 1);
    if (!p.feasible(x, 1e-9)) continue;
    const double v = p.user_objective(x);
    if (!best.feasible || sg * v < sg * best.value - 1e-15 ||
        (std::abs(v - best.value) <= 1e-15 &&
         std::lexicographical_compare(x.begin(), x.end(), best.x.begin(), best.x.end()))) {
      best.feasible = true;
      best.value = v;
      best.x = x;
    }
  }
  return best;
}

}  // namespace isdp
