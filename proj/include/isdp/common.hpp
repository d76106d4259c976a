#pragma once

#include <chrono>
#include <limits>

namespace isdp {

/// Cooperative wall-clock limit, checked between solver iterations and
/// branch-and-bound nodes.
class Deadline {
 public:
  Deadline() : at_(std::chrono::steady_clock::time_point::max()) {}
  explicit Deadline(double seconds_from_now)
      : at_(seconds_from_now >= 1e17
                ? std::chrono::steady_clock::time_point::max()
                : std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(seconds_from_now))) {}

  static Deadline never() { return Deadline(); }

  bool expired() const { return std::chrono::steady_clock::now() >= at_; }

  double remaining_s() const {
    if (at_ == std::chrono::steady_clock::time_point::max())
      return std::numeric_limits<double>::infinity();
    return std::chrono::duration<double>(at_ - std::chrono::steady_clock::now()).count();
  }

 private:
  std::chrono::steady_clock::time_point at_;
};

class StopWatch {
 public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace isdp
