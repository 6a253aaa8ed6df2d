#include "puffprint/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace puffprint {

QuantSpec::QuantSpec(size_t m, double lo, double hi) : m_bits(m), x_min(lo), x_max(hi) {
	if (m_bits == 0 || m_bits > 62)
		throw std::invalid_argument("QuantSpec: m_bits must lie in [1, 62]");
	if (!(x_min < x_max))
		throw std::invalid_argument("QuantSpec: x_min must be strictly below x_max");
}

double QuantSpec::scale() const {
	return (std::ldexp(1.0, static_cast<int>(m_bits)) - 1.0) / (x_max - x_min);
}

double quantize(double x, const QuantSpec &spec) {
	const double s = spec.scale();
	const double clipped = std::clamp(x, spec.x_min, spec.x_max);
	return std::round(s * clipped) / s;
}

void quantize(std::vector<double> &values, const QuantSpec &spec) {
	const double s = spec.scale();
	for (double &x : values)
		x = std::round(s * std::clamp(x, spec.x_min, spec.x_max)) / s;
}

} // namespace puffprint
