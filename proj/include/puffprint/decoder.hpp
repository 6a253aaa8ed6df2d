#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "puffprint/encoding.hpp"
#include "puffprint/nn.hpp"
#include "puffprint/puf.hpp"
#include "puffprint/tensor.hpp"

namespace puffprint {

/**
 * Parameters of the synthetic logit-difference dataset used to train the
 * stage-1 decoder: R devices, Q samples each, one perturbation scale drawn
 * per device from epsilon_set, Gaussian student noise of stddev sigma.
 * p_flip optionally corrupts the device key per sample before encoding; the
 * default 0 matches the clean-key generation procedure.
 */
struct SynthConfig {
	size_t n = 10;      // key bit-length
	size_t d = 10;      // logit dimension
	size_t devices = 100;
	size_t samples_per_device = 1000;
	std::vector<double> epsilon_set = {0.01, 0.02, 0.05, 0.1};
	double sigma = 0.1;
	double p_flip = 0.0;
	SchemeVariant variant = SchemeVariant::OneBit;
	size_t bits_per_logit = 1;
	uint64_t rng_seed = 1;

	void validate() const;
};

struct SynthDataset {
	Tensor inputs;  // R*Q x d logit differences
	Tensor targets; // R*Q x n key bits
};

/// Alg.-style dataset: delta(key, per-device epsilon) + N(0, sigma^2 I).
/// Row order is (device 0 sample 0..Q-1, device 1 ...), reproducible per seed.
SynthDataset build_synthetic_dataset(const SynthConfig &cfg, const KeyRegistry &registry);

struct DecoderTrainOutcome {
	Network net;
	double val_bit_accuracy = 0.0; // thresholded bit accuracy on the held-out rows
	TrainResult train;
};

/// MLP bit predictor (d inputs -> sigmoid n outputs) trained with BCE on the
/// synthetic dataset. hidden defaults to the stock 128-128 decoder.
DecoderTrainOutcome train_decoder(const SynthDataset &dataset, const TrainConfig &cfg,
                                  const std::vector<size_t> &hidden = {128, 128});

enum class ProbeAggregation { MeanProbability, MajorityVote, MeanDelta };

struct Stage1Prediction {
	PufKey key;
	std::vector<double> confidence; // 2*|mean - 0.5| per bit
};

/**
 * Run the decoder on a batch of probe logit differences and aggregate.
 * MeanProbability (default) averages the per-bit probabilities over the
 * batch; MajorityVote thresholds each sample first and averages the votes;
 * MeanDelta averages the probe rows and decodes the single mean row, which
 * holds up when per-probe noise is far heavier than the decoder's training
 * noise. A bit is 1 when its aggregate exceeds 0.5; exactly 0.5 resolves
 * to 0.
 */
Stage1Prediction stage1_predict(const Network &decoder, const Tensor &probe_deltas,
                                ProbeAggregation aggregation = ProbeAggregation::MeanProbability);

/// Ensemble form: the per-bit aggregates of the member networks are averaged
/// before thresholding. Members are typically trained on independent draws
/// of the synthetic dataset, which damps the per-dataset fit noise.
Stage1Prediction stage1_predict(const std::vector<Network> &decoders, const Tensor &probe_deltas,
                                ProbeAggregation aggregation = ProbeAggregation::MeanProbability);

struct RecoveryResult {
	PufKey predicted_raw;        // stage-1 (or analytic) thresholded bits
	PufKey recovered;            // registry entry minimizing Hamming distance
	std::string device_id;       // id of the matched entry
	size_t distance = 0;         // d_H(predicted_raw, recovered)
	bool tie_flag = false;       // minimum was attained by several entries
	std::optional<size_t> stage1_hamming_to_truth;
};

/// Nearest registered key by Hamming distance; ties resolve to the lowest
/// registry index with tie_flag set. The registry must not be empty.
RecoveryResult stage2_refine(const PufKey &predicted, const KeyRegistry &registry);

/// Full two-stage pipeline: neural bit prediction, then registry matching.
RecoveryResult recover(const Network &decoder, const Tensor &probe_deltas,
                       const KeyRegistry &registry, const PufKey *truth = nullptr,
                       ProbeAggregation aggregation = ProbeAggregation::MeanProbability);

RecoveryResult recover(const std::vector<Network> &decoders, const Tensor &probe_deltas,
                       const KeyRegistry &registry, const PufKey *truth = nullptr,
                       ProbeAggregation aggregation = ProbeAggregation::MeanProbability);

/// Analytic stage-1 (nearest-level inversion of the batch-mean delta), then
/// registry matching. Default recovery path for the compressed scheme.
RecoveryResult recover_analytic(const EncodingScheme &scheme, const Tensor &probe_deltas,
                                const KeyRegistry &registry, const PufKey *truth = nullptr);

} // namespace puffprint
