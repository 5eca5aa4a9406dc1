#include "parkcast/kernels.hpp"

#include <atomic>
#include <cstring>

#include <omp.h>

namespace parkcast::kernels {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::Parallel};
}

void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }
ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
int max_threads() { return omp_get_max_threads(); }

namespace {

// One output row: c_row[j] = sum_k a_row[l] * b[l*m + j], accumulated in
// ascending l so serial and parallel paths produce identical bits.
inline void matmul_row(const double *a_row, const double *b, double *c_row,
                       std::size_t k, std::size_t m) {
  std::memset(c_row, 0, m * sizeof(double));
  for (std::size_t l = 0; l < k; ++l) {
    const double av = a_row[l];
    const double *b_row = b + l * m;
    for (std::size_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
  }
}

} // namespace

void matmul_serial(const double *a, const double *b, double *c,
                   std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    matmul_row(a + i * k, b, c + i * m, k, m);
}

void matmul_parallel(const double *a, const double *b, double *c,
                     std::size_t n, std::size_t k, std::size_t m) {
  if (n * k * m < kParallelCutoff) { // team start-up costs more than the work
    matmul_serial(a, b, c, n, k, m);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    matmul_row(a + i * k, b, c + i * m, k, m);
}

void matmul(const double *a, const double *b, double *c,
            std::size_t n, std::size_t k, std::size_t m) {
  if (exec_mode() == ExecMode::Parallel)
    matmul_parallel(a, b, c, n, k, m);
  else
    matmul_serial(a, b, c, n, k, m);
}

void matmul_abt_acc(const double *a, const double *b, double *c,
                    std::size_t n, std::size_t m, std::size_t k) {
  // c[i*k + l] += dot(a_row_i, b_row_l); rows of b play the transposed role.
  for (std::size_t i = 0; i < n; ++i) {
    const double *a_row = a + i * m;
    double *c_row = c + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double *b_row = b + l * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += a_row[j] * b_row[j];
      c_row[l] += acc;
    }
  }
}

void matmul_atb_acc(const double *a, const double *b, double *c,
                    std::size_t n, std::size_t k, std::size_t m) {
  // c[l*m + j] += sum_i a[i*k + l] * b[i*m + j]
  for (std::size_t i = 0; i < n; ++i) {
    const double *a_row = a + i * k;
    const double *b_row = b + i * m;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a_row[l];
      if (av == 0.0) continue;
      double *c_row = c + l * m;
      for (std::size_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
    }
  }
}

double sum_serial(const double *x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sum_sq_diff_serial(const double *a, const double *b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

} // namespace parkcast::kernels
