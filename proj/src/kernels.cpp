#include "puffprint/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace puffprint::kernels {

namespace {
std::atomic<bool> g_parallel{true};
std::atomic<int> g_threads{0}; // 0 = OpenMP default
} // namespace

bool parallel_enabled() {
#ifdef _OPENMP
	return g_parallel.load();
#else
	return false;
#endif
}

void set_parallel(bool enabled) { g_parallel.store(enabled); }

int worker_threads() {
	const int n = g_threads.load();
	if (n > 0)
		return n;
#ifdef _OPENMP
	return std::max(1, omp_get_max_threads());
#else
	return 1;
#endif
}

void set_worker_threads(int n) {
	g_threads.store(std::max(0, n));
#ifdef _OPENMP
	if (n > 0)
		omp_set_num_threads(n);
#endif
}

namespace serial {

void matmul_nt(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
	for (size_t i = 0; i < m; ++i) {
		const double *ai = a + i * k;
		double *oi = out + i * n;
		for (size_t j = 0; j < n; ++j) {
			const double *bj = b + j * k;
			double acc = 0.0;
			for (size_t p = 0; p < k; ++p)
				acc += ai[p] * bj[p];
			oi[j] = acc;
		}
	}
}

void matmul_nn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
	for (size_t i = 0; i < m; ++i) {
		const double *ai = a + i * k;
		double *oi = out + i * n;
		std::fill(oi, oi + n, 0.0);
		for (size_t p = 0; p < k; ++p) {
			const double s = ai[p];
			const double *bp = b + p * n;
			for (size_t j = 0; j < n; ++j)
				oi[j] += s * bp[j];
		}
	}
}

void matmul_tn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
	for (size_t i = 0; i < m; ++i) {
		double *oi = out + i * n;
		std::fill(oi, oi + n, 0.0);
		for (size_t p = 0; p < k; ++p) {
			const double s = a[p * m + i];
			const double *bp = b + p * n;
			for (size_t j = 0; j < n; ++j)
				oi[j] += s * bp[j];
		}
	}
}

void add_bias_rows(double *y, const double *bias, size_t rows, size_t cols) {
	for (size_t i = 0; i < rows; ++i) {
		double *yi = y + i * cols;
		for (size_t j = 0; j < cols; ++j)
			yi[j] += bias[j];
	}
}

void relu_forward(const double *x, double *y, size_t len) {
	for (size_t i = 0; i < len; ++i)
		y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double *x, const double *dy, double *dx, size_t len) {
	for (size_t i = 0; i < len; ++i)
		dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

void sigmoid_forward(const double *x, double *y, size_t len) {
	for (size_t i = 0; i < len; ++i)
		y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_backward(const double *y, const double *dy, double *dx, size_t len) {
	for (size_t i = 0; i < len; ++i)
		dx[i] = dy[i] * y[i] * (1.0 - y[i]);
}

} // namespace serial

namespace omp {

void matmul_nt(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(m); ++i) {
		const double *ai = a + static_cast<size_t>(i) * k;
		double *oi = out + static_cast<size_t>(i) * n;
		for (size_t j = 0; j < n; ++j) {
			const double *bj = b + j * k;
			double acc = 0.0;
			for (size_t p = 0; p < k; ++p)
				acc += ai[p] * bj[p];
			oi[j] = acc;
		}
	}
}

void matmul_nn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(m); ++i) {
		const double *ai = a + static_cast<size_t>(i) * k;
		double *oi = out + static_cast<size_t>(i) * n;
		std::fill(oi, oi + n, 0.0);
		for (size_t p = 0; p < k; ++p) {
			const double s = ai[p];
			const double *bp = b + p * n;
			for (size_t j = 0; j < n; ++j)
				oi[j] += s * bp[j];
		}
	}
}

void matmul_tn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(m); ++i) {
		double *oi = out + static_cast<size_t>(i) * n;
		std::fill(oi, oi + n, 0.0);
		for (size_t p = 0; p < k; ++p) {
			const double s = a[p * m + static_cast<size_t>(i)];
			const double *bp = b + p * n;
			for (size_t j = 0; j < n; ++j)
				oi[j] += s * bp[j];
		}
	}
}

void add_bias_rows(double *y, const double *bias, size_t rows, size_t cols) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(rows); ++i) {
		double *yi = y + static_cast<size_t>(i) * cols;
		for (size_t j = 0; j < cols; ++j)
			yi[j] += bias[j];
	}
}

void relu_forward(const double *x, double *y, size_t len) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(len); ++i)
		y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double *x, const double *dy, double *dx, size_t len) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(len); ++i)
		dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

void sigmoid_forward(const double *x, double *y, size_t len) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(len); ++i)
		y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_backward(const double *y, const double *dy, double *dx, size_t len) {
#pragma omp parallel for schedule(static)
	for (long i = 0; i < static_cast<long>(len); ++i)
		dx[i] = dy[i] * y[i] * (1.0 - y[i]);
}

} // namespace omp

#define PUFFPRINT_DISPATCH(fn, ...)                                                                \
	do {                                                                                           \
		if (parallel_enabled())                                                                    \
			omp::fn(__VA_ARGS__);                                                                  \
		else                                                                                       \
			serial::fn(__VA_ARGS__);                                                               \
	} while (0)

void matmul_nt(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
	PUFFPRINT_DISPATCH(matmul_nt, a, b, out, m, k, n);
}
void matmul_nn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
	PUFFPRINT_DISPATCH(matmul_nn, a, b, out, m, k, n);
}
void matmul_tn(const double *a, const double *b, double *out, size_t m, size_t k, size_t n) {
	PUFFPRINT_DISPATCH(matmul_tn, a, b, out, m, k, n);
}
void add_bias_rows(double *y, const double *bias, size_t rows, size_t cols) {
	PUFFPRINT_DISPATCH(add_bias_rows, y, bias, rows, cols);
}
void relu_forward(const double *x, double *y, size_t len) {
	PUFFPRINT_DISPATCH(relu_forward, x, y, len);
}
void relu_backward(const double *x, const double *dy, double *dx, size_t len) {
	PUFFPRINT_DISPATCH(relu_backward, x, dy, dx, len);
}
void sigmoid_forward(const double *x, double *y, size_t len) {
	PUFFPRINT_DISPATCH(sigmoid_forward, x, y, len);
}
void sigmoid_backward(const double *y, const double *dy, double *dx, size_t len) {
	PUFFPRINT_DISPATCH(sigmoid_backward, y, dy, dx, len);
}

#undef PUFFPRINT_DISPATCH

} // namespace puffprint::kernels
