#pragma once

#include <cmath>
#include <cstdint>

namespace puffprint {

/**
 * Seedable pseudo-random generator used everywhere in the project.
 *
 * The algorithm is fixed on purpose: xoshiro256** seeded through splitmix64,
 * Box-Muller for normals, 53-bit mantissa scaling for uniforms. No standard
 * library distributions are involved, so a given seed reproduces the same
 * stream on every platform and compiler.
 */
class Rng {
  public:
	explicit Rng(uint64_t seed) {
		uint64_t x = seed;
		for (auto &word : state_)
			word = splitmix64(x);
	}

	/// Seed of the independent sub-stream for (master seed, stream index).
	static uint64_t derive_seed(uint64_t master_seed, uint64_t stream) {
		uint64_t x = master_seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
		return splitmix64(x);
	}

	/// Independent sub-stream, e.g. one per trial or per device.
	static Rng derive(uint64_t master_seed, uint64_t stream) {
		return Rng(derive_seed(master_seed, stream));
	}

	uint64_t next_u64() {
		const uint64_t result = rotl(state_[1] * 5, 7) * 9;
		const uint64_t t = state_[1] << 17;
		state_[2] ^= state_[0];
		state_[3] ^= state_[1];
		state_[1] ^= state_[2];
		state_[0] ^= state_[3];
		state_[2] ^= t;
		state_[3] = rotl(state_[3], 45);
		return result;
	}

	/// Uniform double in [0, 1).
	double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

	/// Uniform double in [lo, hi).
	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	bool bernoulli(double p) { return uniform() < p; }

	/// Standard normal via Box-Muller; the second value of each pair is cached.
	double normal() {
		if (has_spare_) {
			has_spare_ = false;
			return spare_;
		}
		const double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
		const double u2 = uniform();
		const double r = std::sqrt(-2.0 * std::log(u1));
		const double theta = 2.0 * 3.14159265358979323846 * u2;
		spare_ = r * std::sin(theta);
		has_spare_ = true;
		return r * std::cos(theta);
	}

	double normal(double mean, double stddev) { return mean + stddev * normal(); }

	/// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
	uint64_t below(uint64_t bound) {
		const uint64_t threshold = (0 - bound) % bound;
		for (;;) {
			const uint64_t r = next_u64();
			if (r >= threshold)
				return r % bound;
		}
	}

  private:
	static uint64_t splitmix64(uint64_t &x) {
		uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
		z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
		z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
		return z ^ (z >> 31);
	}

	static uint64_t splitmix64(uint64_t &&x) {
		uint64_t tmp = x;
		return splitmix64(tmp);
	}

	static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

	uint64_t state_[4];
	double spare_ = 0.0;
	bool has_spare_ = false;
};

} // namespace puffprint
