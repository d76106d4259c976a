#pragma once

// Counter-based pseudorandom streams. Every draw is a pure function of
// (key, stream, counter), so generated instances are identical across
// platforms and independent of draw order.

#include <cmath>
#include <cstdint>

namespace isdp {

namespace detail {
inline std::uint64_t counter_mix(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t stream)
      : base_(detail::counter_mix(key * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL) ^
              detail::counter_mix(stream + 0x8BB84B93962EACC9ULL)) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return detail::counter_mix(base_ + counter * 0x9E3779B97F4A7C15ULL);
  }

  /// uniform in [0,1)
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * (1.0 / 9007199254740992.0);
  }

  /// uniform integer in {lo,...,hi}
  std::int64_t uniform_int(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(bits(counter) % span);
  }

  /// standard normal via the Acklam inverse-CDF approximation refined by one
  /// Halley step; uses only +-*/, sqrt, log, exp
  double normal(std::uint64_t counter) const {
    double u = uniform(counter);
    u = u + 0.5 * (1.0 / 9007199254740992.0);  // keep strictly inside (0,1)
    return inverse_normal_cdf(u);
  }

  static double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (p < plow) {
      const double q = std::sqrt(-2 * std::log(p));
      x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
          ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= phigh) {
      const double q = p - 0.5, r = q * q;
      x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
          (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
      const double q = std::sqrt(-2 * std::log(1 - p));
      x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
          ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    // one Halley refinement against the exact CDF
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    x = x - u / (1 + x * u / 2);
    return x;
  }

 private:
  std::uint64_t base_;
};

}  // namespace isdp
