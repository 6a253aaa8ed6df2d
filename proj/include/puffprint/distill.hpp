#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "puffprint/encoding.hpp"
#include "puffprint/nn.hpp"
#include "puffprint/puf.hpp"
#include "puffprint/quantize.hpp"
#include "puffprint/tensor.hpp"

namespace puffprint {

/**
 * Synthetic classification task: `classes` Gaussian clusters in
 * input_dim-dimensional space. class_separation scales the cluster centers
 * against unit-variance within-cluster noise, so it tunes the achievable
 * accuracy from chance (0) to perfect (large).
 */
struct TaskSpec {
	size_t classes = 10;
	size_t input_dim = 16;
	size_t samples_per_class = 200; // per split
	double class_separation = 1.0;
	uint64_t rng_seed = 1;

	void validate() const;
};

struct TaskData {
	Tensor train_x, train_y; // labels as one class index per row
	Tensor test_x, test_y;
	size_t classes = 0;
};

TaskData make_task(const TaskSpec &spec);

struct TeacherResult {
	Network net;
	double test_accuracy = 0.0;
	TrainResult train;
};

/// Cross-entropy teacher; when quant is given, weights are snapped to the
/// grid afterwards and the network switches to fake-quantized inference.
TeacherResult train_teacher(const TaskData &task, const std::vector<size_t> &hidden,
                            const TrainConfig &cfg, const std::optional<QuantSpec> &quant = {});

/**
 * One fingerprinted distillation run. temperature = 0 selects plain
 * logit-matching MSE distillation; temperature > 0 selects the softened-KL
 * loss at that temperature.
 */
struct DistillRun {
	EncodingScheme scheme;
	PufKey leaker_key;
	NoiseModel noise;       // bit-flip model applied to the key per batch row
	double temperature = 0.0;

	void validate(size_t logit_dim) const;
};

/**
 * Teacher logits with the fingerprint superimposed: each batch row gets its
 * own noise-corrupted copy of the leaker key, encoded and added to the clean
 * logits. Pure function of (teacher, inputs, run).
 */
Tensor fingerprinted_logits(const Network &teacher, const Tensor &inputs, const DistillRun &run);

struct DistillOutcome {
	Network student;         // trained on fingerprinted logits
	Network control_student; // same seed, trained on clean logits
	double acc_p = 0.0;      // test accuracy of the fingerprinted student
	double acc_s = 0.0;      // test accuracy of the control student
	std::vector<double> fp_loss_history, ctrl_loss_history; // per epoch
	bool diverged = false;
};

/**
 * Distill a student against the fingerprinted teacher outputs, plus a
 * control student against the clean outputs under the same seed. The two
 * trainings share initialization and batch order; only the targets differ,
 * so a perturbation below double resolution yields bit-identical students.
 */
DistillOutcome distill_student(const Network &teacher, const DistillRun &run, const TaskData &task,
                               const std::vector<size_t> &student_hidden, const TrainConfig &cfg);

/// Row-wise student minus clean-teacher logits on shared probe inputs.
Tensor probe_deltas(const Network &teacher, const Network &student, const Tensor &probe_inputs);

} // namespace puffprint
