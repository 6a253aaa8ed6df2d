#pragma once

#include <cstddef>

namespace puffprint::kernels {

// Dense-layer compute kernels. Every kernel exists twice: a serial reference
// in kernels::serial and an OpenMP version in kernels::omp that parallelizes
// over independent output rows. Per output element the accumulation order is
// identical in both, so results are bitwise equal for any thread count.
//
// The unqualified wrappers below dispatch on the process-wide parallel flag.

bool parallel_enabled();
void set_parallel(bool enabled);

/// Worker threads used by the omp kernels and by trial loops (clamped to >= 1).
int worker_threads();
void set_worker_threads(int n);

namespace serial {

/// out[m x n] = a[m x k] * b[n x k]^T   (dense forward: X * W^T)
void matmul_nt(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);

/// out[m x n] = a[m x k] * b[k x n]     (backward to inputs: dY * W)
void matmul_nn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);

/// out[m x n] = a[k x m]^T * b[k x n]   (weight gradient: dY^T * X)
void matmul_tn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);

/// y[r x c] += bias[c] broadcast over rows
void add_bias_rows(double *y, const double *bias, size_t rows, size_t cols);

void relu_forward(const double *x, double *y, size_t len);
/// dx = dy where x > 0, else 0
void relu_backward(const double *x, const double *dy, double *dx, size_t len);
void sigmoid_forward(const double *x, double *y, size_t len);
/// dx = dy * y * (1 - y), y being the cached sigmoid output
void sigmoid_backward(const double *y, const double *dy, double *dx, size_t len);

} // namespace serial

namespace omp {

void matmul_nt(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);
void matmul_nn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);
void matmul_tn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);
void add_bias_rows(double *y, const double *bias, size_t rows, size_t cols);
void relu_forward(const double *x, double *y, size_t len);
void relu_backward(const double *x, const double *dy, double *dx, size_t len);
void sigmoid_forward(const double *x, double *y, size_t len);
void sigmoid_backward(const double *y, const double *dy, double *dx, size_t len);

} // namespace omp

void matmul_nt(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);
void matmul_nn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);
void matmul_tn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n);
void add_bias_rows(double *y, const double *bias, size_t rows, size_t cols);
void relu_forward(const double *x, double *y, size_t len);
void relu_backward(const double *x, const double *dy, double *dx, size_t len);
void sigmoid_forward(const double *x, double *y, size_t len);
void sigmoid_backward(const double *y, const double *dy, double *dx, size_t len);

} // namespace puffprint::kernels
