#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "puffprint/quantize.hpp"
#include "puffprint/rng.hpp"
#include "puffprint/tensor.hpp"

namespace puffprint {

enum class LayerKind { Dense, ReLU, Sigmoid, SoftmaxT };

struct Layer {
	LayerKind kind = LayerKind::Dense;
	size_t in = 0, out = 0;      // Dense only
	std::vector<double> w;       // out x in, row-major
	std::vector<double> b;       // out
	double temperature = 1.0;    // SoftmaxT only
};

/**
 * Sequential dense network. Layers must chain dimensionally; activation
 * layers keep the width of the preceding dense layer.
 *
 * When activation_quant is set the network runs in fake-quantized inference
 * mode: the input and every layer output pass through quantize(). Such a
 * network cannot be trained (backward is undefined across the rounding).
 */
struct Network {
	std::vector<Layer> layers;
	std::optional<QuantSpec> activation_quant;

	void add_dense(size_t in, size_t out, Rng &rng);
	void add_relu();
	void add_sigmoid();
	void add_softmax_t(double temperature);

	size_t input_dim() const;
	size_t output_dim() const;
	size_t parameter_count() const;

	Tensor forward(const Tensor &input) const;
	/// Forward pass keeping per-layer activations: acts[i] is the input of
	/// layer i and acts.back() the network output.
	Tensor forward_cached(const Tensor &input, std::vector<Tensor> &acts) const;

	/// Versioned binary checkpoint: header, layer table, then little-endian
	/// 64-bit floats for every dense layer's weights and biases.
	void save(const std::string &path) const;
	static Network load(const std::string &path);

	bool weights_finite() const;
};

/// input -> hidden... (ReLU) -> output, optionally ending in a sigmoid.
Network make_mlp(size_t input, const std::vector<size_t> &hidden, size_t output, Rng &rng,
                 bool sigmoid_output = false);

struct Gradients {
	std::vector<std::vector<double>> w, b; // parallel to layers, empty for activations
	static Gradients zeros_like(const Network &net);
};

/// Backpropagate grad_output (dL/d output) through the cached activations.
/// Fills parameter gradients; optionally also returns dL/d input.
Gradients backward(const Network &net, const std::vector<Tensor> &acts, const Tensor &grad_output,
                   Tensor *grad_input = nullptr);

// ---- losses -------------------------------------------------------------
// Every loss returns the scalar value averaged over the batch and, when grad
// is non-null, writes dL/d(pred) of the same shape as pred. Probabilities are
// clamped to [1e-7, 1 - 1e-7] before any logarithm.

/// Row-wise softmax(x / T); rows sum to 1. Requires T > 0.
Tensor softmax_t(const Tensor &logits, double temperature);

double loss_mse(const Tensor &pred, const Tensor &target, Tensor *grad = nullptr);
double loss_bce(const Tensor &pred, const Tensor &target, Tensor *grad = nullptr);
/// target holds one class index per row (column vector).
double loss_ce(const Tensor &logits, const Tensor &target, Tensor *grad = nullptr);
/// T^2-scaled KL between softened teacher and student rows; grad is w.r.t.
/// the student logits.
double loss_kd(const Tensor &teacher_logits, const Tensor &student_logits, double temperature,
               Tensor *grad_student = nullptr);

enum class LossKind { Mse, Bce, CrossEntropy, Kd };

struct LossSpec {
	LossKind kind = LossKind::Mse;
	double temperature = 1.0; // Kd only
};

double loss_value_grad(const LossSpec &spec, const Tensor &pred, const Tensor &target,
                       Tensor *grad = nullptr);

// ---- training -----------------------------------------------------------

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
	double learning_rate = 1e-3;
	/// Per-epoch multiplicative decay of the learning rate (1 = constant).
	double lr_decay = 1.0;
	size_t batch_size = 128;
	size_t max_epochs = 50;
	OptimizerKind optimizer = OptimizerKind::Adam;
	double adam_beta1 = 0.9;
	double adam_beta2 = 0.999;
	double adam_eps = 1e-8;
	/// Epochs without validation improvement before stopping. 0 disables the
	/// validation split and early stopping.
	size_t early_stop_patience = 5;
	double validation_fraction = 0.1;
	/// When > 0, the returned weights are the average of the final K epoch
	/// snapshots (Polyak-style tail averaging) instead of the best-validation
	/// snapshot. Damps the optimizer's endpoint noise.
	size_t average_tail_epochs = 0;
	uint64_t rng_seed = 1;

	void validate() const;
};

struct TrainResult {
	std::vector<double> train_loss; // one entry per epoch run
	std::vector<double> val_loss;   // empty without a validation split
	size_t epochs_run = 0;
	bool diverged = false;
	double best_val_loss = 0.0;
};

/**
 * Mini-batch training, fully deterministic for a given config: the split,
 * the shuffles and the weight init all come from cfg.rng_seed. With early
 * stopping active, the weights revert to the best validation epoch. A
 * non-finite loss aborts with diverged = true and the history so far.
 * max_epochs = 0 records the initial loss and returns without updating.
 */
TrainResult train(Network &net, const Tensor &inputs, const Tensor &targets, const LossSpec &loss,
                  const TrainConfig &cfg);

/// Snap every weight and bias to the quantization grid (post-training).
void quantize_weights(Network &net, const QuantSpec &spec);

/// Fraction of rows whose argmax logit equals the label column.
double accuracy(const Network &net, const Tensor &inputs, const Tensor &labels);

} // namespace puffprint
