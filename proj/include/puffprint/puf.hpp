#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "puffprint/rng.hpp"

namespace puffprint {

/**
 * Binary device identity of fixed bit-length n. bits[i] is always 0 or 1;
 * bit 0 is the most significant digit of the hex serialization.
 */
class PufKey {
  public:
	PufKey() = default;
	explicit PufKey(std::vector<uint8_t> bits);

	size_t size() const { return bits_.size(); }
	uint8_t bit(size_t i) const { return bits_[i]; }
	void flip(size_t i) { bits_[i] ^= 1; }
	const std::vector<uint8_t> &bits() const { return bits_; }

	bool operator==(const PufKey &other) const { return bits_ == other.bits_; }
	bool operator!=(const PufKey &other) const { return bits_ != other.bits_; }

	/// Big-endian hex, zero-padded to ceil(n/4) digits; bit 0 is the MSB.
	std::string to_hex() const;
	static PufKey from_hex(const std::string &hex, size_t n_bits);

	/// "0101..." form, bit 0 first.
	std::string to_bit_string() const;
	static PufKey from_bit_string(const std::string &s);

  private:
	std::vector<uint8_t> bits_;
};

/// Bernoulli bit-flip noise: each bit flips independently with probability p_flip.
struct NoiseModel {
	double p_flip = 0.0;
	uint64_t rng_seed = 0;

	NoiseModel() = default;
	NoiseModel(double p, uint64_t seed);
};

/**
 * Enrolled-key database. Keys all share one bit-length and are pairwise
 * distinct; ids[i] names the device owning keys[i].
 */
class KeyRegistry {
  public:
	KeyRegistry() = default;
	KeyRegistry(std::vector<PufKey> keys, std::vector<std::string> ids);

	size_t count() const { return keys_.size(); }
	size_t bit_length() const { return keys_.empty() ? 0 : keys_[0].size(); }
	const PufKey &key(size_t i) const { return keys_[i]; }
	const std::string &id(size_t i) const { return ids_[i]; }
	const std::vector<PufKey> &keys() const { return keys_; }

	/// Index of an exact key match, or -1.
	long find(const PufKey &key) const;
	/// Index of a device id, or -1.
	long find_id(const std::string &device_id) const;

	/// Text format: "n=<bits> count=<R>" header, then "<device-id> <hex-key>" per line.
	void save(const std::string &path) const;
	void write(std::ostream &out) const;
	static KeyRegistry load(const std::string &path);
	static KeyRegistry read(std::istream &in);

  private:
	std::vector<PufKey> keys_;
	std::vector<std::string> ids_;
};

/**
 * Draw R distinct uniform n-bit keys. Device ids are "dev000", "dev001", ...
 * Rejects n = 0 and R > 2^n. Bit-for-bit reproducible for a given seed.
 */
KeyRegistry generate_registry(size_t n_bits, size_t devices, uint64_t rng_seed);

/**
 * XOR the key with B independent Bernoulli(p_flip) masks, one per row.
 * Mask bits are drawn row-major from an Rng seeded with model.rng_seed,
 * so the result is a pure function of (key, model, batch).
 */
std::vector<PufKey> apply_noise(const PufKey &key, const NoiseModel &model, size_t batch);

/// Number of differing bit positions; requires equal lengths.
size_t hamming_distance(const PufKey &a, const PufKey &b);

} // namespace puffprint
