// Times the serial reference kernels against the OpenMP versions and reports
// throughput plus speedup. Run with an optional size argument, default 256.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "puffprint/kernels.hpp"
#include "puffprint/rng.hpp"

using namespace puffprint;
using clock_type = std::chrono::steady_clock;

namespace {

using KernelFn = void (*)(const double *, const double *, double *, size_t, size_t, size_t);

double time_kernel(KernelFn fn, const std::vector<double> &a, const std::vector<double> &b,
                   std::vector<double> &out, size_t m, size_t k, size_t n, int reps) {
	fn(a.data(), b.data(), out.data(), m, k, n); // warm-up
	const auto t0 = clock_type::now();
	for (int r = 0; r < reps; ++r)
		fn(a.data(), b.data(), out.data(), m, k, n);
	const auto t1 = clock_type::now();
	return std::chrono::duration<double>(t1 - t0).count() / reps;
}

} // namespace

int main(int argc, char **argv) {
	const size_t size = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 256;
	const int reps = argc > 2 ? std::atoi(argv[2]) : 10;
	const size_t m = size, k = size, n = size;

	Rng rng(42);
	std::vector<double> a(m * k), b(n * k), out(m * n);
	for (auto &v : a)
		v = rng.normal();
	for (auto &v : b)
		v = rng.normal();

	struct Entry {
		const char *name;
		KernelFn serial, parallel;
	};
	const Entry entries[] = {
	    {"matmul_nt", kernels::serial::matmul_nt, kernels::omp::matmul_nt},
	    {"matmul_nn", kernels::serial::matmul_nn, kernels::omp::matmul_nn},
	    {"matmul_tn", kernels::serial::matmul_tn, kernels::omp::matmul_tn},
	};

	const double flops = 2.0 * static_cast<double>(m) * k * n;
	std::printf("size %zux%zux%zu, %d reps, %d worker thread(s)\n", m, k, n, reps,
	            kernels::worker_threads());
	std::printf("%-10s %12s %12s %10s %10s %9s\n", "kernel", "serial(ms)", "omp(ms)",
	            "ser GF/s", "omp GF/s", "speedup");
	for (const auto &e : entries) {
		const double ts = time_kernel(e.serial, a, b, out, m, k, n, reps);
		const double tp = time_kernel(e.parallel, a, b, out, m, k, n, reps);
		std::printf("%-10s %12.3f %12.3f %10.2f %10.2f %8.2fx\n", e.name, ts * 1e3, tp * 1e3,
		            flops / ts * 1e-9, flops / tp * 1e-9, ts / tp);
	}
	return 0;
}
