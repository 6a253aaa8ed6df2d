#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "puffprint/quantize.hpp"
#include "puffprint/rng.hpp"

using namespace puffprint;

TEST_SUITE_BEGIN("quantize");

TEST_CASE("midpoint of an 8-bit unit grid rounds half away from zero") {
	const QuantSpec spec(8, 0.0, 1.0);
	CHECK(quantize(0.5, spec) == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("boundaries and clipping") {
	const QuantSpec spec(6, -2.0, 3.0);
	const double s = spec.scale();
	CHECK(quantize(-2.0, spec) == doctest::Approx(std::round(s * -2.0) / s));
	CHECK(quantize(6.0, spec) == quantize(3.0, spec));
	CHECK(quantize(-100.0, spec) == quantize(-2.0, spec));
}

TEST_CASE("idempotence and monotonicity over random inputs") {
	const QuantSpec specs[] = {QuantSpec(8, 0.0, 1.0), QuantSpec(4, -1.0, 1.0),
	                           QuantSpec(12, -7.3, 2.9)};
	Rng rng(17);
	for (const auto &spec : specs) {
		double prev_x = -1e9, prev_q = quantize(-1e9, spec);
		for (int i = 0; i < 10000; ++i) {
			const double x = rng.uniform(-12.0, 12.0);
			const double q = quantize(x, spec);
			CHECK(quantize(q, spec) == q);
			// monotone: compare against the previous sample in sorted order
			if (x >= prev_x)
				CHECK(q >= prev_q);
			else
				CHECK(q <= prev_q);
			prev_x = x;
			prev_q = q;
		}
	}
}

TEST_CASE("max in-range quantization error is half a step") {
	const QuantSpec spec(5, -1.0, 2.0);
	const double bound = 1.0 / (2.0 * spec.scale()) + 1e-12;
	Rng rng(18);
	for (int i = 0; i < 5000; ++i) {
		const double x = rng.uniform(-1.0, 2.0);
		CHECK(std::abs(quantize(x, spec) - x) <= bound);
	}
}

TEST_CASE("spec validation") {
	CHECK_THROWS_AS(QuantSpec(0, 0.0, 1.0), std::invalid_argument);
	CHECK_THROWS_AS(QuantSpec(8, 1.0, 1.0), std::invalid_argument);
	CHECK_THROWS_AS(QuantSpec(8, 2.0, 1.0), std::invalid_argument);
}

TEST_SUITE_END();
