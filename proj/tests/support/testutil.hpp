#pragma once

// Shared test helpers: independent reference implementations (oracles)
// and random tensor generators. Oracles are deliberately written in a
// different style from the library kernels they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "parkcast/rng.hpp"
#include "parkcast/tensor.hpp"

namespace testutil {

using parkcast::Rng;
using parkcast::ad::Shape;
using parkcast::ad::Tensor;

inline Tensor random_tensor(Rng &rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = rng.uniform(lo, hi);
  return t;
}

// Naive j-inner product; loop order differs from the library kernel.
inline std::vector<double> matmul_oracle(const std::vector<double> &a,
                                         const std::vector<double> &b,
                                         std::size_t n, std::size_t k,
                                         std::size_t m) {
  std::vector<double> c(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l)
        acc += a[i * k + l] * b[l * m + j];
      c[i * m + j] = acc;
    }
  return c;
}

inline double max_abs_diff(const double *a, const double *b, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline bool bit_equal(const double *a, const double *b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] != b[i])
      return false;
  return true;
}

} // namespace testutil
