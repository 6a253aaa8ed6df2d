#pragma once

#include <cstdint>
#include <vector>

#include "puffprint/puf.hpp"

namespace puffprint {

using LogitVector = std::vector<double>;
using PerturbationVector = std::vector<double>;

enum class SchemeVariant { OneBit, Compressed };

/**
 * Mapping from key bits to a logit perturbation.
 *
 * OneBit: one key bit per logit, delta_i = epsilon * (1 - 2 k_i), so bit 0
 * encodes +epsilon and bit 1 encodes -epsilon.
 *
 * Compressed: the key splits into consecutive m-bit segments, segment i being
 * bits [i*m, (i+1)*m). Each segment is read as an m-bit two's-complement
 * integer U (first bit = sign bit) and delta_i = epsilon * (U + 0.5). The
 * half-level shift makes the 2^m levels symmetric about zero with gap epsilon.
 */
struct EncodingScheme {
	SchemeVariant variant = SchemeVariant::OneBit;
	double epsilon = 0.0;
	size_t bits_per_logit = 1;

	EncodingScheme() = default;
	EncodingScheme(SchemeVariant v, double eps, size_t m = 1);

	/// Key bit-length required to drive d logits.
	size_t key_bits_for(size_t logits) const { return logits * bits_per_logit; }
	/// Number of distinct identities representable with d logits (2^(m*d)); requires m*d <= 63.
	uint64_t capacity(size_t logits) const;
};

/// Key -> perturbation vector; key length must be a multiple of bits_per_logit.
PerturbationVector encode(const PufKey &key, const EncodingScheme &scheme);

/// Fingerprinted logits z_puf = z + delta (elementwise, equal lengths).
LogitVector embed(const LogitVector &teacher_logits, const PerturbationVector &delta);

/**
 * Exact inverse of encode on noisy estimates.
 *
 * OneBit: bit = 0 where the estimate is positive, 1 otherwise (an exact zero
 * maps to bit 1; zero never arises from a valid encoding). Compressed: the
 * estimate is snapped to the nearest level, U = round(delta/eps - 0.5) with
 * halves rounded away from zero, clamped to [-2^(m-1), 2^(m-1)-1], then
 * re-encoded as two's complement.
 */
PufKey analytic_decode(const std::vector<double> &delta_estimate, const EncodingScheme &scheme);

} // namespace puffprint
