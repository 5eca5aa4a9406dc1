#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "parkcast/error.hpp"

namespace parkcast {

/// Deterministic RNG with platform-stable derived values. mt19937_64 has
/// a standardized output sequence; the mappings below avoid
/// std::uniform_*_distribution, whose results differ between standard
/// library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform in [0, n). Modulo bias is negligible at the scales used here
  /// and the result is identical everywhere.
  std::size_t below(std::size_t n) {
    if (n == 0)
      throw ContractError("Rng::below: empty range");
    return static_cast<std::size_t>(eng_() % n);
  }

  /// Fisher-Yates shuffle.
  template <class T> void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[below(i)]);
  }

private:
  std::mt19937_64 eng_;
};

} // namespace parkcast
