#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gridshap {

/// Seeded random source with a fully specified output mapping.
///
/// The raw stream is std::mt19937_64 (a named, standardized generator that
/// produces identical output on every platform). The standard library
/// *distributions* are implementation-defined, so uniform doubles and bounded
/// integers are derived here explicitly:
///   - uniform(low, high): top 53 bits of one draw, scaled into [low, high)
///   - below(n): rejection sampling on the raw 64-bit stream
/// Identical seeds therefore yield identical samples everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// One double uniform on [low, high). low is attainable, high is not.
  double uniform(double low, double high) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return low + u * (high - low);
  }

  /// One integer uniform on [0, n). n must be >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates shuffle driven by below(); platform-independent.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gridshap
