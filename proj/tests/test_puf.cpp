#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>
#include <sstream>

#include "puffprint/puf.hpp"

using namespace puffprint;

TEST_SUITE_BEGIN("puf");

TEST_CASE("generate_registry covers the full key space for n=1, R=2") {
	const KeyRegistry reg = generate_registry(1, 2, 7);
	REQUIRE(reg.count() == 2);
	std::set<std::string> seen = {reg.key(0).to_bit_string(), reg.key(1).to_bit_string()};
	CHECK(seen == std::set<std::string>{"0", "1"});
}

TEST_CASE("generate_registry yields R distinct keys of the right length") {
	const KeyRegistry reg = generate_registry(10, 100, 42);
	REQUIRE(reg.count() == 100);
	std::set<std::string> seen;
	for (size_t i = 0; i < reg.count(); ++i) {
		CHECK(reg.key(i).size() == 10);
		seen.insert(reg.key(i).to_bit_string());
	}
	CHECK(seen.size() == 100);
}

TEST_CASE("generate_registry rejects exhausted key spaces and n=0") {
	CHECK_THROWS_AS(generate_registry(3, 9, 1), std::invalid_argument);
	CHECK_THROWS_AS(generate_registry(0, 1, 1), std::invalid_argument);
	CHECK_THROWS_AS(generate_registry(4, 0, 1), std::invalid_argument);
	CHECK_NOTHROW(generate_registry(3, 8, 1)); // exactly 2^3 is fine
}

TEST_CASE("generate_registry reproduces bit-for-bit under a fixed seed") {
	const KeyRegistry a = generate_registry(16, 50, 99);
	const KeyRegistry b = generate_registry(16, 50, 99);
	for (size_t i = 0; i < a.count(); ++i) {
		CHECK(a.key(i) == b.key(i));
		CHECK(a.id(i) == b.id(i));
	}
	const KeyRegistry c = generate_registry(16, 50, 100);
	size_t same = 0;
	for (size_t i = 0; i < a.count(); ++i)
		same += a.key(i) == c.key(i);
	CHECK(same < 5); // different seed, different keys
}

TEST_CASE("apply_noise with p=0 copies and with p=1 complements") {
	const PufKey key = PufKey::from_bit_string("10110");
	const auto copies = apply_noise(key, NoiseModel(0.0, 3), 5);
	REQUIRE(copies.size() == 5);
	for (const auto &row : copies)
		CHECK(row == key);

	const auto complemented = apply_noise(key, NoiseModel(1.0, 3), 1);
	CHECK(complemented[0] == PufKey::from_bit_string("01001"));
}

TEST_CASE("apply_noise flip fraction sits in the binomial 99% interval") {
	// 1000-bit key, 200 rows: 200,000 mask bits at p = 0.05
	std::vector<uint8_t> bits(1000, 0);
	const PufKey key{bits};
	const double p = 0.05;
	const auto rows = apply_noise(key, NoiseModel(p, 12345), 200);
	size_t flips = 0;
	for (const auto &row : rows)
		for (size_t i = 0; i < row.size(); ++i)
			flips += row.bit(i);
	const double total = 1000.0 * 200.0;
	const double fraction = static_cast<double>(flips) / total;
	const double half_width = 2.576 * std::sqrt(p * (1 - p) / total);
	CHECK(fraction > p - half_width);
	CHECK(fraction < p + half_width);
	CHECK(fraction > 0.04);
	CHECK(fraction < 0.06);
}

TEST_CASE("apply_noise is deterministic per model seed") {
	const PufKey key = PufKey::from_bit_string("1100101");
	const auto a = apply_noise(key, NoiseModel(0.3, 8), 6);
	const auto b = apply_noise(key, NoiseModel(0.3, 8), 6);
	for (size_t i = 0; i < a.size(); ++i)
		CHECK(a[i] == b[i]);
}

TEST_CASE("hamming_distance basics") {
	CHECK(hamming_distance(PufKey::from_bit_string("1011"), PufKey::from_bit_string("1111")) == 1);
	const PufKey k = PufKey::from_bit_string("100110");
	CHECK(hamming_distance(k, k) == 0);
	CHECK(hamming_distance(PufKey::from_bit_string("000"), PufKey::from_bit_string("111")) == 3);
	CHECK_THROWS_AS(hamming_distance(PufKey::from_bit_string("01"),
	                                 PufKey::from_bit_string("011")),
	                std::invalid_argument);
}

TEST_CASE("hamming_distance symmetry and triangle inequality on random triples") {
	Rng rng(5);
	for (int iter = 0; iter < 200; ++iter) {
		const size_t n = 1 + rng.below(24);
		auto draw = [&] {
			std::vector<uint8_t> v(n);
			for (auto &b : v)
				b = static_cast<uint8_t>(rng.next_u64() & 1);
			return PufKey(std::move(v));
		};
		const PufKey a = draw(), b = draw(), c = draw();
		CHECK(hamming_distance(a, b) == hamming_distance(b, a));
		CHECK(hamming_distance(a, a) == 0);
		CHECK(hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c));
	}
}

TEST_CASE("registry text round trip preserves keys, ids and order") {
	const KeyRegistry reg = generate_registry(13, 20, 31);
	std::stringstream buffer;
	reg.write(buffer);
	const KeyRegistry back = KeyRegistry::read(buffer);
	REQUIRE(back.count() == reg.count());
	CHECK(back.bit_length() == 13);
	for (size_t i = 0; i < reg.count(); ++i) {
		CHECK(back.key(i) == reg.key(i));
		CHECK(back.id(i) == reg.id(i));
	}
}

TEST_CASE("registry rejects duplicates and mixed lengths") {
	const PufKey a = PufKey::from_bit_string("0101");
	const PufKey b = PufKey::from_bit_string("0110");
	CHECK_THROWS_AS(KeyRegistry({a, a}, {"x", "y"}), std::invalid_argument);
	CHECK_THROWS_AS(KeyRegistry({a, PufKey::from_bit_string("01101")}, {"x", "y"}),
	                std::invalid_argument);
	CHECK_NOTHROW(KeyRegistry({a, b}, {"x", "y"}));
}

TEST_CASE("hex serialization uses bit 0 as the most significant digit") {
	// 10 bits: 10 1111 0000 -> padded to 2f0
	CHECK(PufKey::from_bit_string("1011110000").to_hex() == "2f0");
	CHECK(PufKey::from_hex("2f0", 10) == PufKey::from_bit_string("1011110000"));
	CHECK_THROWS_AS(PufKey::from_hex("ff", 7), std::invalid_argument); // padding bit set
	CHECK_THROWS_AS(PufKey::from_hex("f", 10), std::invalid_argument); // wrong digit count
}

TEST_SUITE_END();
