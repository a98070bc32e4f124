#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cooprec {

// Portable random stream: mt19937_64 (its output sequence is fixed by the
// standard) with hand-written conversions, because the std:: distributions
// are implementation-defined and would break cross-platform seed replay.
// Stream version 1; bump kRngStreamVersion if any conversion below changes.
inline constexpr int kRngStreamVersion = 1;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  /// Fisher-Yates shuffle driven by index().
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cooprec
