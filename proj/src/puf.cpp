#include "puffprint/puf.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace puffprint {

PufKey::PufKey(std::vector<uint8_t> bits) : bits_(std::move(bits)) {
	for (uint8_t b : bits_)
		if (b != 0 && b != 1)
			throw std::invalid_argument("PufKey: bits must be 0 or 1");
}

std::string PufKey::to_hex() const {
	const size_t n = bits_.size();
	const size_t digits = (n + 3) / 4;
	const size_t pad = digits * 4 - n; // implicit leading zero bits
	std::string hex(digits, '0');
	for (size_t d = 0; d < digits; ++d) {
		unsigned nibble = 0;
		for (size_t j = 0; j < 4; ++j) {
			const size_t pos = d * 4 + j; // position in the padded bit string
			nibble <<= 1;
			if (pos >= pad && bits_[pos - pad])
				nibble |= 1;
		}
		hex[d] = "0123456789abcdef"[nibble];
	}
	return hex;
}

PufKey PufKey::from_hex(const std::string &hex, size_t n_bits) {
	const size_t digits = (n_bits + 3) / 4;
	if (hex.size() != digits)
		throw std::invalid_argument("PufKey: expected " + std::to_string(digits) +
		                            " hex digits for " + std::to_string(n_bits) + " bits");
	const size_t pad = digits * 4 - n_bits;
	std::vector<uint8_t> bits(n_bits);
	for (size_t d = 0; d < digits; ++d) {
		const char c = hex[d];
		unsigned nibble = 0;
		if (c >= '0' && c <= '9')
			nibble = static_cast<unsigned>(c - '0');
		else if (c >= 'a' && c <= 'f')
			nibble = static_cast<unsigned>(c - 'a') + 10;
		else if (c >= 'A' && c <= 'F')
			nibble = static_cast<unsigned>(c - 'A') + 10;
		else
			throw std::invalid_argument("PufKey: invalid hex digit");
		for (size_t j = 0; j < 4; ++j) {
			const size_t pos = d * 4 + j;
			const uint8_t bit = (nibble >> (3 - j)) & 1;
			if (pos < pad) {
				if (bit)
					throw std::invalid_argument("PufKey: padding bits must be zero");
			} else {
				bits[pos - pad] = bit;
			}
		}
	}
	return PufKey(std::move(bits));
}

std::string PufKey::to_bit_string() const {
	std::string s(bits_.size(), '0');
	for (size_t i = 0; i < bits_.size(); ++i)
		if (bits_[i])
			s[i] = '1';
	return s;
}

PufKey PufKey::from_bit_string(const std::string &s) {
	std::vector<uint8_t> bits(s.size());
	for (size_t i = 0; i < s.size(); ++i) {
		if (s[i] != '0' && s[i] != '1')
			throw std::invalid_argument("PufKey: bit string must contain only 0/1");
		bits[i] = static_cast<uint8_t>(s[i] - '0');
	}
	return PufKey(std::move(bits));
}

NoiseModel::NoiseModel(double p, uint64_t seed) : p_flip(p), rng_seed(seed) {
	if (!(p >= 0.0 && p <= 1.0))
		throw std::invalid_argument("NoiseModel: p_flip must lie in [0, 1]");
}

KeyRegistry::KeyRegistry(std::vector<PufKey> keys, std::vector<std::string> ids)
    : keys_(std::move(keys)), ids_(std::move(ids)) {
	if (keys_.size() != ids_.size())
		throw std::invalid_argument("KeyRegistry: one id per key required");
	std::set<std::vector<uint8_t>> seen;
	for (const auto &k : keys_) {
		if (k.size() != keys_[0].size())
			throw std::invalid_argument("KeyRegistry: all keys must share one bit-length");
		if (!seen.insert(k.bits()).second)
			throw std::invalid_argument("KeyRegistry: duplicate key");
	}
}

long KeyRegistry::find(const PufKey &key) const {
	for (size_t i = 0; i < keys_.size(); ++i)
		if (keys_[i] == key)
			return static_cast<long>(i);
	return -1;
}

long KeyRegistry::find_id(const std::string &device_id) const {
	for (size_t i = 0; i < ids_.size(); ++i)
		if (ids_[i] == device_id)
			return static_cast<long>(i);
	return -1;
}

void KeyRegistry::write(std::ostream &out) const {
	out << "n=" << bit_length() << " count=" << count() << "\n";
	for (size_t i = 0; i < keys_.size(); ++i)
		out << ids_[i] << " " << keys_[i].to_hex() << "\n";
}

void KeyRegistry::save(const std::string &path) const {
	std::ofstream out(path);
	if (!out)
		throw std::runtime_error("KeyRegistry: cannot open " + path + " for writing");
	write(out);
	if (!out)
		throw std::runtime_error("KeyRegistry: write to " + path + " failed");
}

KeyRegistry KeyRegistry::read(std::istream &in) {
	std::string header;
	if (!std::getline(in, header))
		throw std::runtime_error("KeyRegistry: missing header line");
	size_t n = 0, count = 0;
	if (std::sscanf(header.c_str(), "n=%zu count=%zu", &n, &count) != 2)
		throw std::runtime_error("KeyRegistry: malformed header: " + header);
	std::vector<PufKey> keys;
	std::vector<std::string> ids;
	keys.reserve(count);
	ids.reserve(count);
	std::string line;
	while (std::getline(in, line)) {
		if (line.empty())
			continue;
		std::istringstream row(line);
		std::string id, hex;
		if (!(row >> id >> hex))
			throw std::runtime_error("KeyRegistry: malformed entry: " + line);
		ids.push_back(id);
		keys.push_back(PufKey::from_hex(hex, n));
	}
	if (keys.size() != count)
		throw std::runtime_error("KeyRegistry: header promised " + std::to_string(count) +
		                         " keys, found " + std::to_string(keys.size()));
	return KeyRegistry(std::move(keys), std::move(ids));
}

KeyRegistry KeyRegistry::load(const std::string &path) {
	std::ifstream in(path);
	if (!in)
		throw std::runtime_error("KeyRegistry: cannot open " + path);
	return read(in);
}

KeyRegistry generate_registry(size_t n_bits, size_t devices, uint64_t rng_seed) {
	if (n_bits == 0)
		throw std::invalid_argument("generate_registry: key bit-length must be at least 1");
	if (devices == 0)
		throw std::invalid_argument("generate_registry: device count must be at least 1");
	if (n_bits < 64 && devices > (uint64_t{1} << n_bits))
		throw std::invalid_argument("generate_registry: " + std::to_string(devices) +
		                            " devices exceed the 2^" + std::to_string(n_bits) +
		                            " key space");
	Rng rng(rng_seed);
	std::set<std::vector<uint8_t>> seen;
	std::vector<PufKey> keys;
	std::vector<std::string> ids;
	keys.reserve(devices);
	while (keys.size() < devices) {
		std::vector<uint8_t> bits(n_bits);
		for (auto &b : bits)
			b = static_cast<uint8_t>(rng.next_u64() >> 63);
		if (!seen.insert(bits).second)
			continue; // resample collisions until R distinct keys exist
		keys.emplace_back(std::move(bits));
	}
	char id[32];
	for (size_t i = 0; i < devices; ++i) {
		std::snprintf(id, sizeof id, "dev%03zu", i);
		ids.emplace_back(id);
	}
	return KeyRegistry(std::move(keys), std::move(ids));
}

std::vector<PufKey> apply_noise(const PufKey &key, const NoiseModel &model, size_t batch) {
	if (batch == 0)
		throw std::invalid_argument("apply_noise: batch size must be at least 1");
	Rng rng(model.rng_seed);
	std::vector<PufKey> rows;
	rows.reserve(batch);
	for (size_t j = 0; j < batch; ++j) {
		std::vector<uint8_t> bits(key.size());
		for (size_t i = 0; i < key.size(); ++i)
			bits[i] = key.bit(i) ^ static_cast<uint8_t>(rng.bernoulli(model.p_flip));
		rows.emplace_back(std::move(bits));
	}
	return rows;
}

size_t hamming_distance(const PufKey &a, const PufKey &b) {
	if (a.size() != b.size())
		throw std::invalid_argument("hamming_distance: length mismatch (" +
		                            std::to_string(a.size()) + " vs " +
		                            std::to_string(b.size()) + ")");
	size_t d = 0;
	for (size_t i = 0; i < a.size(); ++i)
		d += a.bit(i) != b.bit(i);
	return d;
}

} // namespace puffprint
