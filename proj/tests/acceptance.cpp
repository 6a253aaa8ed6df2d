// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Each criterion runs the real library pipeline with a fixed seed and its
// tolerances pinned in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "puffprint/eval.hpp"
#include "puffprint/gradcheck.hpp"
#include "puffprint/quantize.hpp"

using namespace puffprint;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string &name, bool pass, const std::string &detail,
            double seconds) {
	std::printf("[%s] %d. %-28s (%6.1fs) %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), seconds,
	            detail.c_str());
	std::fflush(stdout);
	failures += !pass;
}

double elapsed(clock_type::time_point t0) {
	return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string csv_bytes(const SweepReport &report) {
	std::ostringstream out;
	write_trials_csv(report, out);
	return out.str();
}

PufKey key_from_value(uint64_t value, size_t n) {
	std::vector<uint8_t> bits(n);
	for (size_t i = 0; i < n; ++i)
		bits[i] = static_cast<uint8_t>((value >> (n - 1 - i)) & 1);
	return PufKey(std::move(bits));
}

const GridPointStats *find_point(const SweepReport &rep, double eps) {
	for (const auto &g : rep.aggregates)
		if (g.epsilon == eps)
			return &g;
	return nullptr;
}

// ---- criterion 1: gradient suite -----------------------------------------

void criterion_gradients() {
	const auto t0 = clock_type::now();
	const auto cases = run_gradient_suite(20, 0xACCE57, 1e-4, 1e-5);
	bool pass = !cases.empty();
	double worst = 0;
	for (const auto &c : cases) {
		pass &= c.pass && c.configs >= 20;
		worst = std::max(worst, c.max_rel_err);
	}
	const double secs = elapsed(t0);
	pass &= secs < 10.0;
	char buf[160];
	std::snprintf(buf, sizeof buf, "%zu loss/arch cases x 20 configs, max rel err %.2e (< 1e-4)",
	              cases.size(), worst);
	report(1, "gradient-suite", pass, buf, secs);
}

// ---- criterion 2: encoding round trip ------------------------------------

void criterion_encoding() {
	const auto t0 = clock_type::now();
	bool pass = true;
	size_t keys_checked = 0;

	for (size_t n = 1; n <= 16 && pass; ++n) {
		const EncodingScheme scheme(SchemeVariant::OneBit, 0.05);
		for (uint64_t v = 0; v < (uint64_t{1} << n); ++v) {
			const PufKey k = key_from_value(v, n);
			pass &= analytic_decode(encode(k, scheme), scheme) == k;
			++keys_checked;
		}
	}
	const struct {
		size_t m, d;
	} grids[] = {{1, 16}, {2, 8}, {3, 5}, {4, 4}, {5, 3}, {8, 2}, {16, 1}};
	for (const auto &g : grids) {
		const EncodingScheme scheme(SchemeVariant::Compressed, 0.4, g.m);
		for (uint64_t v = 0; v < (uint64_t{1} << (g.m * g.d)) && pass; ++v) {
			const PufKey k = key_from_value(v, g.m * g.d);
			pass &= analytic_decode(encode(k, scheme), scheme) == k;
			++keys_checked;
		}
	}

	// the documented m=3, eps=0.4 level table, all eight rows exactly
	const struct {
		const char *bits;
		double delta;
	} table[] = {{"000", +0.2}, {"001", +0.6}, {"010", +1.0}, {"011", +1.4},
	             {"111", -0.2}, {"110", -0.6}, {"101", -1.0}, {"100", -1.4}};
	const EncodingScheme m3(SchemeVariant::Compressed, 0.4, 3);
	for (const auto &row : table) {
		const auto delta = encode(PufKey::from_bit_string(row.bits), m3);
		pass &= std::abs(delta[0] - row.delta) < 1e-12;
		pass &= analytic_decode({row.delta}, m3) == PufKey::from_bit_string(row.bits);
	}

	const double secs = elapsed(t0);
	pass &= secs < 5.0;
	char buf[160];
	std::snprintf(buf, sizeof buf, "%zu keys round-tripped exactly, 8/8 level-table rows",
	              keys_checked);
	report(2, "encoding-round-trip", pass, buf, secs);
}

// ---- criteria 3+4: decoder-only sweep ------------------------------------

SweepConfig table3_config() {
	SweepConfig cfg;
	cfg.mode = SweepMode::DecoderOnly;
	cfg.schemes = {SweepSchemeSpec{SchemeVariant::OneBit, 10, 10, 1}};
	cfg.epsilons = {0.01, 0.02, 0.05};
	cfg.p_flips = {0.05};
	cfg.sigma = 0.1;
	cfg.devices = 100;
	cfg.samples_per_device = 1000;
	cfg.epsilon_train_set = {0.05, 0.1};
	cfg.trials = 100;
	cfg.probes = 512;
	cfg.decoder_hidden = {64, 64};
	cfg.decoder_ensemble = 5;
	cfg.decoder_train.learning_rate = 1e-3;
	cfg.decoder_train.lr_decay = 0.92;
	cfg.decoder_train.batch_size = 256;
	cfg.decoder_train.max_epochs = 25;
	cfg.decoder_train.early_stop_patience = 0;
	cfg.decoder_train.average_tail_epochs = 8;
	cfg.master_seed = 20260808;
	return cfg;
}

SweepReport criterion_decoder_only() {
	const auto t0 = clock_type::now();
	const SweepReport rep = run_sweep(table3_config());

	const GridPointStats *p01 = find_point(rep, 0.01);
	const GridPointStats *p02 = find_point(rep, 0.02);
	const GridPointStats *p05 = find_point(rep, 0.05);
	bool pass = p01 && p02 && p05;
	char buf[240];
	if (pass) {
		const bool fer_ok = p05->fer_stage2 <= 0.02;
		const bool monotone = p01->mean_ber1 >= p02->mean_ber1 + 0.01 &&
		                      p02->mean_ber1 >= p05->mean_ber1 + 0.01;
		pass = fer_ok && monotone;
		std::snprintf(buf, sizeof buf,
		              "BER1 %.1f -> %.1f -> %.1f%% (>=1pt steps), stage-2 FER @0.05 = %.0f/100 (<=2)",
		              100 * p01->mean_ber1, 100 * p02->mean_ber1, 100 * p05->mean_ber1,
		              100 * p05->fer_stage2);
	} else {
		std::snprintf(buf, sizeof buf, "missing grid points");
	}
	const double secs = elapsed(t0);
	pass &= secs < 300.0;
	report(3, "decoder-only-fer", pass, buf, secs);

	// criterion 4: two-stage improvement at eps = 0.02
	bool pass4 = p02 != nullptr;
	char buf4[200];
	if (p02) {
		if (p02->fer_stage1 > 0.10) {
			pass4 = p02->fer_stage2 < p02->fer_stage1;
			std::snprintf(buf4, sizeof buf4, "stage-1 FER %.0f%% > 10%%: stage-2 FER %.0f%% is lower",
			              100 * p02->fer_stage1, 100 * p02->fer_stage2);
		} else {
			std::snprintf(buf4, sizeof buf4, "stage-1 FER %.0f%% <= 10%%, nothing to improve",
			              100 * p02->fer_stage1);
		}
	} else {
		std::snprintf(buf4, sizeof buf4, "missing grid point");
	}
	report(4, "two-stage-improvement", pass4, buf4, 0.0);
	return rep;
}

// ---- criterion 5: end-to-end traceability ---------------------------------

void criterion_end_to_end() {
	const auto t0 = clock_type::now();
	SweepConfig cfg;
	cfg.mode = SweepMode::EndToEnd;
	cfg.schemes = {SweepSchemeSpec{SchemeVariant::OneBit, 10, 10, 1}};
	cfg.epsilons = {0.05};
	cfg.p_flips = {0.05};
	cfg.sigma = 0.02; // decoder training noise, matched to student residual means
	cfg.devices = 100;
	cfg.samples_per_device = 500;
	cfg.epsilon_train_set = {0.01, 0.02, 0.05, 0.1};
	cfg.trials = 30;
	cfg.probes = 4000;
	cfg.aggregation = ProbeAggregation::MeanDelta;
	cfg.decoder_hidden = {128, 128};
	cfg.decoder_ensemble = 1;
	cfg.decoder_train.learning_rate = 1e-3;
	cfg.decoder_train.batch_size = 256;
	cfg.decoder_train.max_epochs = 15;
	cfg.decoder_train.early_stop_patience = 4;
	cfg.task.classes = 10;
	cfg.task.input_dim = 16;
	cfg.task.samples_per_class = 500;
	cfg.task.class_separation = 0.9;
	cfg.task.rng_seed = 11;
	cfg.teacher_hidden = {64, 64};
	cfg.teacher_train.learning_rate = 3e-3;
	cfg.teacher_train.batch_size = 64;
	cfg.teacher_train.max_epochs = 40;
	cfg.teacher_train.early_stop_patience = 5;
	cfg.teacher_train.rng_seed = 5;
	cfg.student_hidden = {32};
	cfg.student_train.learning_rate = 3e-3;
	cfg.student_train.lr_decay = 0.97;
	cfg.student_train.batch_size = 64;
	cfg.student_train.max_epochs = 220;
	cfg.student_train.early_stop_patience = 0;
	cfg.master_seed = 20260805;

	const SweepReport rep = run_sweep(cfg);
	size_t correct = 0, ok = 0;
	double acc_gap = 0;
	for (const auto &t : rep.trials) {
		if (!t.ok)
			continue;
		++ok;
		correct += !t.frame_error_stage2;
		acc_gap += std::abs(t.acc_p - t.acc_s);
	}
	acc_gap /= std::max<size_t>(1, ok);
	bool pass = ok == 30 && correct >= 28 && acc_gap <= 3.0;
	const double secs = elapsed(t0);
	pass &= secs < 900.0;
	char buf[200];
	std::snprintf(buf, sizeof buf,
	              "leaker identified %zu/30 (>=28), mean |Acc_p-Acc_s| %.2f pts (<=3)", correct,
	              acc_gap);
	report(5, "end-to-end-traceability", pass, buf, secs);
}

// ---- criterion 6: bit compression ------------------------------------------

SweepConfig compressed_config() {
	SweepConfig cfg;
	cfg.mode = SweepMode::DecoderOnly;
	cfg.schemes = {SweepSchemeSpec{SchemeVariant::Compressed, 20, 10, 2}};
	cfg.epsilons = {0.2};
	cfg.p_flips = {0.05};
	cfg.sigma = 0.1;
	cfg.devices = 100;
	cfg.samples_per_device = 1000;
	cfg.trials = 100;
	cfg.probes = 256;
	cfg.master_seed = 20260806;
	return cfg;
}

SweepReport criterion_compressed() {
	const auto t0 = clock_type::now();
	const EncodingScheme scheme(SchemeVariant::Compressed, 0.2, 2);
	bool pass = scheme.capacity(10) == (uint64_t{1} << 20) && scheme.capacity(10) == 1048576u;

	const SweepReport rep = run_sweep(compressed_config());
	const GridPointStats *point = find_point(rep, 0.2);
	char buf[200];
	if (point) {
		pass &= point->fer_stage2 <= 0.02;
		std::snprintf(buf, sizeof buf,
		              "capacity 2^20 = 1048576, 20-bit FER @eps=0.2 = %.0f/100 (<=2)",
		              100 * point->fer_stage2);
	} else {
		pass = false;
		std::snprintf(buf, sizeof buf, "missing grid point");
	}
	const double secs = elapsed(t0);
	pass &= secs < 300.0;
	report(6, "bit-compression", pass, buf, secs);
	return rep;
}

// ---- criterion 7: noise statistics ------------------------------------------

void criterion_noise_stats() {
	const auto t0 = clock_type::now();
	bool pass = true;

	// 200,000 mask bits at p = 0.05, 99% binomial interval
	const double p = 0.05;
	const PufKey zero_key{std::vector<uint8_t>(1000, 0)};
	const auto rows = apply_noise(zero_key, NoiseModel(p, 0xACCE57), 200);
	size_t flips = 0;
	for (const auto &row : rows)
		for (size_t i = 0; i < row.size(); ++i)
			flips += row.bit(i);
	const double total = 200000.0;
	const double fraction = flips / total;
	const double half_width = 2.576 * std::sqrt(p * (1 - p) / total);
	pass &= std::abs(fraction - p) <= half_width;

	// quantize idempotence and monotonicity over 10^4 random inputs
	const QuantSpec spec(8, -2.0, 2.0);
	Rng rng(0xACCE58);
	std::vector<double> xs(10000);
	for (auto &x : xs)
		x = rng.uniform(-4.0, 4.0);
	for (double x : xs) {
		const double q = quantize(x, spec);
		pass &= quantize(q, spec) == q;
	}
	std::sort(xs.begin(), xs.end());
	for (size_t i = 1; i < xs.size(); ++i)
		pass &= quantize(xs[i], spec) >= quantize(xs[i - 1], spec);

	const double secs = elapsed(t0);
	pass &= secs < 5.0;
	char buf[200];
	std::snprintf(buf, sizeof buf,
	              "flip rate %.4f in %.4f+-%.4f (99%% CI), quantize idempotent+monotone on 10^4",
	              fraction, p, half_width);
	report(7, "noise-statistics", pass, buf, secs);
}

// ---- criterion 8: determinism ------------------------------------------------

void criterion_determinism(const SweepReport &table3, const SweepReport &compressed) {
	const auto t0 = clock_type::now();
	// full re-runs with the same master seeds must reproduce the CSVs byte for byte
	const SweepReport table3_again = run_sweep(table3_config());
	const SweepReport compressed_again = run_sweep(compressed_config());
	const bool pass = csv_bytes(table3) == csv_bytes(table3_again) &&
	                  csv_bytes(compressed) == csv_bytes(compressed_again);
	report(8, "determinism", pass,
	       "re-running both sweeps reproduced trials.csv byte-identically", elapsed(t0));
}

} // namespace

int main() {
	std::printf("puffprint acceptance suite\n");
	criterion_gradients();
	criterion_encoding();
	const SweepReport table3 = criterion_decoder_only();
	criterion_end_to_end();
	const SweepReport compressed = criterion_compressed();
	criterion_noise_stats();
	criterion_determinism(table3, compressed);
	std::printf("%d criterion(s) failed\n", failures);
	return failures;
}
