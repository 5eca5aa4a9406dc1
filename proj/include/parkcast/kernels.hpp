#pragma once

#include <cstddef>

namespace parkcast::kernels {

/// Execution mode for the dense kernels. Parallel uses OpenMP with a
/// row-partitioned decomposition, so results are bit-identical to the
/// serial reference regardless of thread count.
enum class ExecMode { Serial, Parallel };

void set_exec_mode(ExecMode mode);
ExecMode exec_mode();
int max_threads();

/// Work threshold (in multiply-adds) below which the parallel entry
/// points fall back to the serial loop.
inline constexpr std::size_t kParallelCutoff = 16384;

// c[n*m] = a[n*k] * b[k*m], row-major. Serial reference.
void matmul_serial(const double *a, const double *b, double *c,
                   std::size_t n, std::size_t k, std::size_t m);
// OpenMP over output rows; per-element accumulation order matches serial.
void matmul_parallel(const double *a, const double *b, double *c,
                     std::size_t n, std::size_t k, std::size_t m);
// Dispatch on exec_mode().
void matmul(const double *a, const double *b, double *c,
            std::size_t n, std::size_t k, std::size_t m);

// c[n*k] += or = a[n*m] * b[k*m]^T  (i.e. a @ transpose(b)).
void matmul_abt_acc(const double *a, const double *b, double *c,
                    std::size_t n, std::size_t m, std::size_t k);
// c[k*m] += a[n*k]^T * b[n*m]  (i.e. transpose(a) @ b).
void matmul_atb_acc(const double *a, const double *b, double *c,
                    std::size_t n, std::size_t k, std::size_t m);

// y[i] = f(x[i]); serial reference and parallel variant.
template <class F>
void map_serial(const double *x, double *y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <class F>
void map_parallel(const double *x, double *y, std::size_t n, F f);

template <class F>
void map(const double *x, double *y, std::size_t n, F f);

// y[i] = f(a[i], b[i])
template <class F>
void zip_serial(const double *a, const double *b, double *y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(a[i], b[i]);
}

template <class F>
void zip_parallel(const double *a, const double *b, double *y, std::size_t n, F f);

template <class F>
void zip(const double *a, const double *b, double *y, std::size_t n, F f);

// y[i] += x[i]
inline void acc(const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

// y[i] += f(a[i], b[i]) — gradient accumulation; always serial so
// adjoints sum in a fixed order.
template <class F>
void zip_acc(const double *a, const double *b, double *y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] += f(a[i], b[i]);
}

// Reductions stay serial in both modes: left-to-right accumulation keeps
// sums bit-exact across thread counts, and every reduction in this code
// base is small.
double sum_serial(const double *x, std::size_t n);
double sum_sq_diff_serial(const double *a, const double *b, std::size_t n);

} // namespace parkcast::kernels

// Template definitions.
#include <omp.h>

namespace parkcast::kernels {

template <class F>
void map_parallel(const double *x, double *y, std::size_t n, F f) {
  if (n < kParallelCutoff) { // below the cutoff the team start-up dominates
    map_serial(x, y, n, f);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = f(x[i]);
}

template <class F>
void map(const double *x, double *y, std::size_t n, F f) {
  if (exec_mode() == ExecMode::Parallel)
    map_parallel(x, y, n, f);
  else
    map_serial(x, y, n, f);
}

template <class F>
void zip_parallel(const double *a, const double *b, double *y, std::size_t n, F f) {
  if (n < kParallelCutoff) {
    zip_serial(a, b, y, n, f);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = f(a[i], b[i]);
}

template <class F>
void zip(const double *a, const double *b, double *y, std::size_t n, F f) {
  if (exec_mode() == ExecMode::Parallel)
    zip_parallel(a, b, y, n, f);
  else
    zip_serial(a, b, y, n, f);
}

} // namespace parkcast::kernels
