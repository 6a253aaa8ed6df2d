#include "puffprint/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace puffprint {

EncodingScheme::EncodingScheme(SchemeVariant v, double eps, size_t m)
    : variant(v), epsilon(eps), bits_per_logit(m) {
	if (!(epsilon > 0.0) || !std::isfinite(epsilon))
		throw std::invalid_argument("EncodingScheme: epsilon must be positive and finite");
	if (bits_per_logit == 0)
		throw std::invalid_argument("EncodingScheme: bits_per_logit must be at least 1");
	if (variant == SchemeVariant::OneBit && bits_per_logit != 1)
		throw std::invalid_argument("EncodingScheme: OneBit implies bits_per_logit = 1");
	if (bits_per_logit > 62)
		throw std::invalid_argument("EncodingScheme: bits_per_logit too large");
}

uint64_t EncodingScheme::capacity(size_t logits) const {
	const size_t total_bits = bits_per_logit * logits;
	if (total_bits > 63)
		throw std::invalid_argument("EncodingScheme: capacity exceeds 2^63, not representable");
	return uint64_t{1} << total_bits;
}

// Segment bits -> two's-complement integer, first bit is the sign bit.
static long segment_value(const PufKey &key, size_t start, size_t m) {
	long u = key.bit(start) ? -(long{1} << (m - 1)) : 0;
	for (size_t j = 1; j < m; ++j)
		u += static_cast<long>(key.bit(start + j)) << (m - 1 - j);
	return u;
}

PerturbationVector encode(const PufKey &key, const EncodingScheme &scheme) {
	const size_t m = scheme.bits_per_logit;
	if (key.size() == 0 || key.size() % m != 0)
		throw std::invalid_argument("encode: key length " + std::to_string(key.size()) +
		                            " is not a positive multiple of bits_per_logit " +
		                            std::to_string(m));
	const size_t d = key.size() / m;
	PerturbationVector delta(d);
	if (scheme.variant == SchemeVariant::OneBit) {
		for (size_t i = 0; i < d; ++i)
			delta[i] = scheme.epsilon * (1.0 - 2.0 * key.bit(i));
	} else {
		for (size_t i = 0; i < d; ++i) {
			const long u = segment_value(key, i * m, m);
			delta[i] = scheme.epsilon * (static_cast<double>(u) + 0.5);
		}
	}
	return delta;
}

LogitVector embed(const LogitVector &teacher_logits, const PerturbationVector &delta) {
	if (teacher_logits.size() != delta.size())
		throw std::invalid_argument("embed: dimension mismatch");
	LogitVector out(teacher_logits.size());
	for (size_t i = 0; i < out.size(); ++i)
		out[i] = teacher_logits[i] + delta[i];
	return out;
}

PufKey analytic_decode(const std::vector<double> &delta_estimate, const EncodingScheme &scheme) {
	const size_t m = scheme.bits_per_logit;
	const size_t d = delta_estimate.size();
	std::vector<uint8_t> bits(d * m);
	if (scheme.variant == SchemeVariant::OneBit) {
		for (size_t i = 0; i < d; ++i)
			bits[i] = delta_estimate[i] > 0.0 ? 0 : 1;
	} else {
		const double lo = -std::ldexp(1.0, static_cast<int>(m) - 1); // -2^(m-1)
		const double hi = -lo - 1.0;
		for (size_t i = 0; i < d; ++i) {
			// std::round rounds halves away from zero, as documented.
			double u = std::round(delta_estimate[i] / scheme.epsilon - 0.5);
			u = std::clamp(u, lo, hi);
			const auto word = static_cast<uint64_t>(static_cast<long>(u)) & ((uint64_t{1} << m) - 1);
			for (size_t j = 0; j < m; ++j)
				bits[i * m + j] = static_cast<uint8_t>((word >> (m - 1 - j)) & 1);
		}
	}
	return PufKey(std::move(bits));
}

} // namespace puffprint
