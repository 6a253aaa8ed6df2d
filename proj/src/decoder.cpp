#include "puffprint/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace puffprint {

void SynthConfig::validate() const {
	if (n == 0 || d == 0)
		throw std::invalid_argument("SynthConfig: n and d must be positive");
	if (devices == 0 || samples_per_device == 0)
		throw std::invalid_argument("SynthConfig: devices and samples_per_device must be positive");
	if (epsilon_set.empty())
		throw std::invalid_argument("SynthConfig: epsilon_set must not be empty");
	for (double e : epsilon_set)
		if (!(e > 0.0) || !std::isfinite(e))
			throw std::invalid_argument("SynthConfig: every epsilon must be positive");
	if (!(sigma >= 0.0) || !std::isfinite(sigma))
		throw std::invalid_argument("SynthConfig: sigma must be non-negative");
	if (!(p_flip >= 0.0 && p_flip <= 1.0))
		throw std::invalid_argument("SynthConfig: p_flip must lie in [0, 1]");
	if (variant == SchemeVariant::OneBit && bits_per_logit != 1)
		throw std::invalid_argument("SynthConfig: OneBit implies bits_per_logit = 1");
	if (n != d * bits_per_logit)
		throw std::invalid_argument("SynthConfig: n must equal d * bits_per_logit");
}

SynthDataset build_synthetic_dataset(const SynthConfig &cfg, const KeyRegistry &registry) {
	cfg.validate();
	if (registry.count() < cfg.devices)
		throw std::invalid_argument("build_synthetic_dataset: registry holds fewer keys than devices");
	if (registry.bit_length() != cfg.n)
		throw std::invalid_argument("build_synthetic_dataset: registry bit-length does not match n");

	const size_t rows = cfg.devices * cfg.samples_per_device;
	SynthDataset ds;
	ds.inputs = Tensor::zeros(rows, cfg.d);
	ds.targets = Tensor::zeros(rows, cfg.n);

	// Independent stream per device so device blocks can be generated in any
	// order (and in parallel) without changing a single byte of the output.
#pragma omp parallel for schedule(static)
	for (long dev = 0; dev < static_cast<long>(cfg.devices); ++dev) {
		Rng rng = Rng::derive(cfg.rng_seed, static_cast<uint64_t>(dev));
		const PufKey &key = registry.key(static_cast<size_t>(dev));
		// one perturbation scale per device
		const double eps = cfg.epsilon_set[rng.below(cfg.epsilon_set.size())];
		const EncodingScheme scheme(cfg.variant, eps, cfg.bits_per_logit);

		for (size_t j = 0; j < cfg.samples_per_device; ++j) {
			const size_t row = static_cast<size_t>(dev) * cfg.samples_per_device + j;
			PufKey sample_key = key;
			if (cfg.p_flip > 0.0)
				for (size_t b = 0; b < sample_key.size(); ++b)
					if (rng.bernoulli(cfg.p_flip))
						sample_key.flip(b);
			const PerturbationVector delta = encode(sample_key, scheme);
			double *x = ds.inputs.row_ptr(row);
			for (size_t c = 0; c < cfg.d; ++c)
				x[c] = delta[c] + (cfg.sigma > 0.0 ? rng.normal(0.0, cfg.sigma) : 0.0);
			double *y = ds.targets.row_ptr(row);
			for (size_t b = 0; b < cfg.n; ++b)
				y[b] = key.bit(b);
		}
	}
	return ds;
}

DecoderTrainOutcome train_decoder(const SynthDataset &dataset, const TrainConfig &cfg,
                                  const std::vector<size_t> &hidden) {
	if (dataset.inputs.rows() == 0)
		throw std::invalid_argument("train_decoder: empty dataset");
	const size_t d = dataset.inputs.cols();
	const size_t n = dataset.targets.cols();

	Rng init_rng(cfg.rng_seed);
	DecoderTrainOutcome out;
	out.net = make_mlp(d, hidden, n, init_rng, /*sigmoid_output=*/true);
	out.train = train(out.net, dataset.inputs, dataset.targets, LossSpec{LossKind::Bce}, cfg);
	if (out.train.diverged)
		return out;

	// Bitwise accuracy on the same held-out rows the early stopping used.
	Rng split_rng(cfg.rng_seed);
	const size_t rows = dataset.inputs.rows();
	std::vector<size_t> order(rows);
	for (size_t i = 0; i < rows; ++i)
		order[i] = i;
	size_t val_count = 0;
	if (cfg.early_stop_patience > 0 && rows >= 2) {
		for (size_t i = rows - 1; i > 0; --i)
			std::swap(order[i], order[split_rng.below(i + 1)]);
		val_count = std::min<size_t>(
		    rows - 1, std::max<size_t>(1, static_cast<size_t>(std::ceil(
		                                      static_cast<double>(rows) * cfg.validation_fraction))));
	} else {
		val_count = rows; // no split: report training-set bit accuracy
	}
	Tensor vx = Tensor::zeros(val_count, d);
	for (size_t i = 0; i < val_count; ++i)
		std::copy(dataset.inputs.row_ptr(order[i]), dataset.inputs.row_ptr(order[i]) + d,
		          vx.row_ptr(i));
	const Tensor prob = out.net.forward(vx);
	size_t correct = 0, total = 0;
	for (size_t i = 0; i < val_count; ++i) {
		for (size_t b = 0; b < n; ++b) {
			const uint8_t bit = prob.at(i, b) > 0.5 ? 1 : 0;
			correct += bit == static_cast<uint8_t>(dataset.targets.at(order[i], b));
			++total;
		}
	}
	out.val_bit_accuracy = static_cast<double>(correct) / static_cast<double>(total);
	return out;
}

namespace {

// per-bit aggregate of one member network over the probe batch
std::vector<double> member_aggregate(const Network &decoder, const Tensor &probe_deltas,
                                     ProbeAggregation aggregation) {
	if (probe_deltas.rows() == 0)
		throw std::invalid_argument("stage1_predict: probe batch must not be empty");
	if (probe_deltas.cols() != decoder.input_dim())
		throw std::invalid_argument("stage1_predict: probe width does not match decoder input");

	if (aggregation == ProbeAggregation::MeanDelta) {
		Tensor mean = Tensor::zeros(1, probe_deltas.cols());
		for (size_t r = 0; r < probe_deltas.rows(); ++r)
			for (size_t c = 0; c < probe_deltas.cols(); ++c)
				mean.at(0, c) += probe_deltas.at(r, c);
		for (double &v : mean.data)
			v /= static_cast<double>(probe_deltas.rows());
		return member_aggregate(decoder, mean, ProbeAggregation::MeanProbability);
	}

	const Tensor probs = decoder.forward(probe_deltas);
	const size_t n = probs.cols();
	const size_t batch = probs.rows();
	std::vector<double> aggregate(n, 0.0);
	if (aggregation == ProbeAggregation::MeanProbability) {
		for (size_t r = 0; r < batch; ++r)
			for (size_t b = 0; b < n; ++b)
				aggregate[b] += probs.at(r, b);
	} else {
		for (size_t r = 0; r < batch; ++r)
			for (size_t b = 0; b < n; ++b)
				aggregate[b] += probs.at(r, b) > 0.5 ? 1.0 : 0.0;
	}
	for (double &a : aggregate)
		a /= static_cast<double>(batch);
	return aggregate;
}

Stage1Prediction threshold_aggregate(std::vector<double> aggregate) {
	Stage1Prediction pred;
	const size_t n = aggregate.size();
	std::vector<uint8_t> bits(n);
	pred.confidence.resize(n);
	for (size_t b = 0; b < n; ++b) {
		bits[b] = aggregate[b] > 0.5 ? 1 : 0; // exactly 0.5 -> 0
		pred.confidence[b] = 2.0 * std::abs(aggregate[b] - 0.5);
	}
	pred.key = PufKey(std::move(bits));
	return pred;
}

} // namespace

Stage1Prediction stage1_predict(const Network &decoder, const Tensor &probe_deltas,
                                ProbeAggregation aggregation) {
	return threshold_aggregate(member_aggregate(decoder, probe_deltas, aggregation));
}

Stage1Prediction stage1_predict(const std::vector<Network> &decoders, const Tensor &probe_deltas,
                                ProbeAggregation aggregation) {
	if (decoders.empty())
		throw std::invalid_argument("stage1_predict: decoder ensemble must not be empty");
	std::vector<double> aggregate;
	for (const Network &net : decoders) {
		const std::vector<double> part = member_aggregate(net, probe_deltas, aggregation);
		if (aggregate.empty())
			aggregate.assign(part.size(), 0.0);
		for (size_t b = 0; b < part.size(); ++b)
			aggregate[b] += part[b];
	}
	for (double &a : aggregate)
		a /= static_cast<double>(decoders.size());
	return threshold_aggregate(std::move(aggregate));
}

RecoveryResult stage2_refine(const PufKey &predicted, const KeyRegistry &registry) {
	if (registry.count() == 0)
		throw std::invalid_argument("stage2_refine: registry is empty");
	RecoveryResult res;
	res.predicted_raw = predicted;
	size_t best = SIZE_MAX, best_idx = 0, at_min = 0;
	for (size_t i = 0; i < registry.count(); ++i) {
		const size_t dist = hamming_distance(predicted, registry.key(i));
		if (dist < best) {
			best = dist;
			best_idx = i;
			at_min = 1;
		} else if (dist == best) {
			++at_min;
		}
	}
	res.recovered = registry.key(best_idx);
	res.device_id = registry.id(best_idx);
	res.distance = best;
	res.tie_flag = at_min > 1;
	return res;
}

RecoveryResult recover(const Network &decoder, const Tensor &probe_deltas,
                       const KeyRegistry &registry, const PufKey *truth,
                       ProbeAggregation aggregation) {
	const Stage1Prediction s1 = stage1_predict(decoder, probe_deltas, aggregation);
	RecoveryResult res = stage2_refine(s1.key, registry);
	if (truth)
		res.stage1_hamming_to_truth = hamming_distance(s1.key, *truth);
	return res;
}

RecoveryResult recover(const std::vector<Network> &decoders, const Tensor &probe_deltas,
                       const KeyRegistry &registry, const PufKey *truth,
                       ProbeAggregation aggregation) {
	const Stage1Prediction s1 = stage1_predict(decoders, probe_deltas, aggregation);
	RecoveryResult res = stage2_refine(s1.key, registry);
	if (truth)
		res.stage1_hamming_to_truth = hamming_distance(s1.key, *truth);
	return res;
}

RecoveryResult recover_analytic(const EncodingScheme &scheme, const Tensor &probe_deltas,
                                const KeyRegistry &registry, const PufKey *truth) {
	if (probe_deltas.rows() == 0)
		throw std::invalid_argument("recover_analytic: probe batch must not be empty");
	std::vector<double> mean(probe_deltas.cols(), 0.0);
	for (size_t r = 0; r < probe_deltas.rows(); ++r)
		for (size_t c = 0; c < probe_deltas.cols(); ++c)
			mean[c] += probe_deltas.at(r, c);
	for (double &m : mean)
		m /= static_cast<double>(probe_deltas.rows());
	const PufKey predicted = analytic_decode(mean, scheme);
	RecoveryResult res = stage2_refine(predicted, registry);
	if (truth)
		res.stage1_hamming_to_truth = hamming_distance(predicted, *truth);
	return res;
}

} // namespace puffprint
