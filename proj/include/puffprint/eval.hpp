#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "puffprint/decoder.hpp"
#include "puffprint/distill.hpp"
#include "puffprint/nn.hpp"
#include "puffprint/puf.hpp"

namespace puffprint {

/// Fraction of differing bits, hamming_distance / n.
double ber(const PufKey &predicted, const PufKey &truth);

enum class SweepMode { DecoderOnly, EndToEnd };

struct SweepSchemeSpec {
	SchemeVariant variant = SchemeVariant::OneBit;
	size_t n = 10;              // key bit-length
	size_t d = 10;              // logit dimension
	size_t bits_per_logit = 1;  // m (compressed only)
};

/**
 * Grid description for multi-trial evaluation. Every (scheme, epsilon,
 * p_flip) combination runs `trials` independent trials with a fresh leaker
 * device each. DecoderOnly samples probe logit differences synthetically;
 * EndToEnd distills a fingerprinted student per trial and probes it.
 */
struct SweepConfig {
	SweepMode mode = SweepMode::DecoderOnly;
	std::vector<SweepSchemeSpec> schemes = {SweepSchemeSpec{}};
	std::vector<double> epsilons = {0.01, 0.02, 0.05};
	std::vector<double> p_flips = {0.05};
	double sigma = 0.1;
	size_t devices = 100;
	size_t samples_per_device = 1000;
	std::vector<double> epsilon_train_set = {0.01, 0.02, 0.05, 0.1};
	size_t trials = 100;
	size_t probes = 256;
	ProbeAggregation aggregation = ProbeAggregation::MeanProbability;
	std::vector<size_t> decoder_hidden = {128, 128};
	/// Stage-1 members trained on independent synthetic dataset draws; their
	/// per-bit aggregates are averaged. 1 = the plain single decoder.
	size_t decoder_ensemble = 1;
	TrainConfig decoder_train;

	// EndToEnd only
	TaskSpec task;
	std::vector<size_t> teacher_hidden = {64, 64};
	std::vector<size_t> student_hidden = {32};
	TrainConfig teacher_train;
	TrainConfig student_train;
	double kd_temperature = 0.0; // 0 selects MSE distillation

	uint64_t master_seed = 1;

	void validate() const;
};

struct TrialReport {
	// grid coordinates
	SweepMode mode = SweepMode::DecoderOnly;
	SweepSchemeSpec scheme;
	double epsilon = 0.0;
	double p_flip = 0.0;
	double sigma = 0.0;
	// trial outcome
	size_t trial_id = 0;
	uint64_t seed = 0;
	bool ok = false;
	std::string error; // non-empty when !ok, never written to the CSV
	std::string leaker_id, recovered_id;
	size_t bit_errors_stage1 = 0;
	bool frame_error_stage1 = false;
	bool frame_error_stage2 = false;
	bool tie_flag = false;
	double acc_s = 0.0, acc_p = 0.0; // NaN in decoder-only mode
};

/// Frame error rate of a report list; stage is 1 or 2. Errors on empty input.
double fer(const std::vector<TrialReport> &reports, int stage);

struct GridPointStats {
	SweepSchemeSpec scheme;
	double epsilon = 0.0;
	double p_flip = 0.0;
	size_t trials_ok = 0, trials_failed = 0;
	double mean_ber1 = 0.0, std_ber1 = 0.0;
	double fer_stage1 = 0.0, fer_stage2 = 0.0;
	double mean_acc_p = 0.0, std_acc_p = 0.0, mean_acc_s = 0.0;
};

struct SweepReport {
	SweepConfig config;
	std::vector<TrialReport> trials;
	std::vector<GridPointStats> aggregates;
};

/// Aggregates recomputed from raw trial rows; run_sweep uses exactly this.
std::vector<GridPointStats> aggregate_trials(const SweepConfig &cfg,
                                             const std::vector<TrialReport> &trials);

/**
 * Run the full grid. Deterministic for a given config (all per-trial seeds
 * derive from master_seed); trials run in parallel and land in a fixed
 * order. Individual trial failures are recorded; the sweep only throws when
 * every trial of some grid point failed.
 */
SweepReport run_sweep(const SweepConfig &cfg);

/// Versioned long-format CSV, one row per trial, byte-stable per config.
void write_trials_csv(const SweepReport &report, std::ostream &out);

/// Aggregate statistics plus the resolved config, as a JSON document.
std::string aggregate_json(const SweepReport &report);

/// Human-readable per-grid-point table (epsilon, Acc_p, BER, FER columns).
std::string summary_table(const SweepReport &report);

} // namespace puffprint
