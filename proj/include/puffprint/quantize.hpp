#pragma once

#include <cstdint>
#include <vector>

namespace puffprint {

/**
 * Uniform m-bit quantization grid over [x_min, x_max] with scale
 * S = (2^m - 1) / (x_max - x_min). Values land on multiples of 1/S
 * (the grid is anchored at zero, not at x_min).
 */
struct QuantSpec {
	size_t m_bits = 8;
	double x_min = 0.0;
	double x_max = 1.0;

	QuantSpec() = default;
	QuantSpec(size_t m, double lo, double hi);

	double scale() const;
};

/**
 * x_hat = round(S * clip(x, x_min, x_max)) / S, halves rounded away from
 * zero. Idempotent and monotone; in-range error is at most 1/(2S).
 */
double quantize(double x, const QuantSpec &spec);

/// Elementwise in-place variant.
void quantize(std::vector<double> &values, const QuantSpec &spec);

} // namespace puffprint
