#include "puffprint/distill.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace puffprint {

void TaskSpec::validate() const {
	if (classes < 2)
		throw std::invalid_argument("TaskSpec: need at least 2 classes");
	if (input_dim == 0 || samples_per_class == 0)
		throw std::invalid_argument("TaskSpec: input_dim and samples_per_class must be positive");
	if (!(class_separation >= 0.0) || !std::isfinite(class_separation))
		throw std::invalid_argument("TaskSpec: class_separation must be non-negative");
}

TaskData make_task(const TaskSpec &spec) {
	spec.validate();
	Rng rng(spec.rng_seed);

	std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.input_dim));
	for (auto &center : centers)
		for (auto &v : center)
			v = spec.class_separation * rng.normal();

	TaskData task;
	task.classes = spec.classes;
	const size_t per_split = spec.classes * spec.samples_per_class;
	task.train_x = Tensor::zeros(per_split, spec.input_dim);
	task.train_y = Tensor::zeros(per_split, 1);
	task.test_x = Tensor::zeros(per_split, spec.input_dim);
	task.test_y = Tensor::zeros(per_split, 1);

	// class-interleaved rows, so any prefix is class-balanced (probe batches
	// slice prefixes of the test split)
	auto fill = [&](Tensor &x, Tensor &y) {
		size_t row = 0;
		for (size_t s = 0; s < spec.samples_per_class; ++s) {
			for (size_t c = 0; c < spec.classes; ++c, ++row) {
				double *out = x.row_ptr(row);
				for (size_t f = 0; f < spec.input_dim; ++f)
					out[f] = centers[c][f] + rng.normal();
				y.at(row, 0) = static_cast<double>(c);
			}
		}
	};
	fill(task.train_x, task.train_y);
	fill(task.test_x, task.test_y);
	return task;
}

TeacherResult train_teacher(const TaskData &task, const std::vector<size_t> &hidden,
                            const TrainConfig &cfg, const std::optional<QuantSpec> &quant) {
	Rng init_rng(cfg.rng_seed);
	TeacherResult result;
	result.net = make_mlp(task.train_x.cols(), hidden, task.classes, init_rng);
	result.train = train(result.net, task.train_x, task.train_y,
	                     LossSpec{LossKind::CrossEntropy}, cfg);
	if (quant) {
		quantize_weights(result.net, *quant);
		result.net.activation_quant = *quant;
	}
	result.test_accuracy = accuracy(result.net, task.test_x, task.test_y);
	return result;
}

void DistillRun::validate(size_t logit_dim) const {
	if (leaker_key.size() != scheme.key_bits_for(logit_dim))
		throw std::invalid_argument("DistillRun: key length " + std::to_string(leaker_key.size()) +
		                            " does not encode into " + std::to_string(logit_dim) +
		                            " logits at " + std::to_string(scheme.bits_per_logit) +
		                            " bits per logit");
	if (!(temperature >= 0.0) || !std::isfinite(temperature))
		throw std::invalid_argument("DistillRun: temperature must be non-negative");
}

Tensor fingerprinted_logits(const Network &teacher, const Tensor &inputs, const DistillRun &run) {
	run.validate(teacher.output_dim());
	Tensor logits = teacher.forward(inputs);
	const std::vector<PufKey> noisy = apply_noise(run.leaker_key, run.noise, logits.rows());
	for (size_t r = 0; r < logits.rows(); ++r) {
		const PerturbationVector delta = encode(noisy[r], run.scheme);
		double *row = logits.row_ptr(r);
		for (size_t c = 0; c < logits.cols(); ++c)
			row[c] += delta[c];
	}
	return logits;
}

namespace {

struct AdamBuffers {
	std::vector<std::vector<double>> mw, vw, mb, vb;
	size_t step = 0;

	explicit AdamBuffers(const Network &net) {
		const size_t count = net.layers.size();
		mw.resize(count);
		vw.resize(count);
		mb.resize(count);
		vb.resize(count);
		for (size_t i = 0; i < count; ++i) {
			mw[i].assign(net.layers[i].w.size(), 0.0);
			vw[i].assign(net.layers[i].w.size(), 0.0);
			mb[i].assign(net.layers[i].b.size(), 0.0);
			vb[i].assign(net.layers[i].b.size(), 0.0);
		}
	}
};

void apply_update(Network &net, const Gradients &grads, AdamBuffers &adam,
                  const TrainConfig &cfg, double lr) {
	adam.step += 1;
	const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
	const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
	for (size_t li = 0; li < net.layers.size(); ++li) {
		Layer &l = net.layers[li];
		if (l.kind != LayerKind::Dense)
			continue;
		auto update = [&](std::vector<double> &param, const std::vector<double> &grad,
		                  std::vector<double> &m, std::vector<double> &v) {
			for (size_t i = 0; i < param.size(); ++i) {
				if (cfg.optimizer == OptimizerKind::Adam) {
					m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
					v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
					param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
				} else {
					param[i] -= lr * grad[i];
				}
			}
		};
		update(l.w, grads.w[li], adam.mw[li], adam.vw[li]);
		update(l.b, grads.b[li], adam.mb[li], adam.vb[li]);
	}
}

double distill_step(Network &student, AdamBuffers &adam, const Tensor &bx, const Tensor &targets,
                    double temperature, const TrainConfig &cfg, double lr) {
	std::vector<Tensor> acts;
	const Tensor out = student.forward_cached(bx, acts);
	Tensor grad;
	double loss;
	if (temperature > 0.0)
		loss = loss_kd(targets, out, temperature, &grad);
	else
		loss = loss_mse(out, targets, &grad);
	if (!std::isfinite(loss))
		return loss;
	const Gradients grads = backward(student, acts, grad);
	apply_update(student, grads, adam, cfg, lr);
	return loss;
}

} // namespace

DistillOutcome distill_student(const Network &teacher, const DistillRun &run, const TaskData &task,
                               const std::vector<size_t> &student_hidden, const TrainConfig &cfg) {
	cfg.validate();
	run.validate(teacher.output_dim());
	const size_t n = task.train_x.rows();
	if (n == 0)
		throw std::invalid_argument("distill_student: empty task");

	// Separate streams: both students share init and batch order; only the
	// fingerprinted arm consumes the noise stream. A perturbation that
	// vanishes in double precision therefore leaves the two arms identical.
	Rng init_rng = Rng::derive(cfg.rng_seed, 0);
	Rng shuffle_rng = Rng::derive(cfg.rng_seed, 1);
	const uint64_t noise_master = Rng::derive_seed(cfg.rng_seed, 2);

	DistillOutcome outcome;
	outcome.student = make_mlp(task.train_x.cols(), student_hidden, task.classes, init_rng);
	outcome.control_student = outcome.student;

	AdamBuffers adam_fp(outcome.student);
	AdamBuffers adam_ctrl(outcome.control_student);

	std::vector<size_t> order(n);
	for (size_t i = 0; i < n; ++i)
		order[i] = i;

	uint64_t step = 0;
	double lr = cfg.learning_rate;
	for (size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
		if (epoch > 0)
			lr *= cfg.lr_decay;
		for (size_t i = n - 1; i > 0; --i)
			std::swap(order[i], order[shuffle_rng.below(i + 1)]);
		double fp_loss = 0.0, ctrl_loss = 0.0;
		for (size_t start = 0; start < n; start += cfg.batch_size, ++step) {
			const size_t stop = std::min(n, start + cfg.batch_size);
			Tensor bx = Tensor::zeros(stop - start, task.train_x.cols());
			for (size_t r = start; r < stop; ++r)
				std::copy(task.train_x.row_ptr(order[r]),
				          task.train_x.row_ptr(order[r]) + task.train_x.cols(),
				          bx.row_ptr(r - start));

			const Tensor clean = teacher.forward(bx);

			// fresh bit-flip noise for every batch, per training step
			NoiseModel step_noise(run.noise.p_flip, Rng::derive_seed(noise_master, step));
			const std::vector<PufKey> noisy = apply_noise(run.leaker_key, step_noise, clean.rows());
			Tensor fingerprinted = clean;
			for (size_t r = 0; r < fingerprinted.rows(); ++r) {
				const PerturbationVector delta = encode(noisy[r], run.scheme);
				double *row = fingerprinted.row_ptr(r);
				for (size_t c = 0; c < fingerprinted.cols(); ++c)
					row[c] += delta[c];
			}

			const double lf = distill_step(outcome.student, adam_fp, bx, fingerprinted,
			                               run.temperature, cfg, lr);
			const double lc = distill_step(outcome.control_student, adam_ctrl, bx, clean,
			                               run.temperature, cfg, lr);
			if (!std::isfinite(lf) || !std::isfinite(lc)) {
				outcome.diverged = true;
				return outcome;
			}
			fp_loss += lf * static_cast<double>(stop - start);
			ctrl_loss += lc * static_cast<double>(stop - start);
		}
		outcome.fp_loss_history.push_back(fp_loss / static_cast<double>(n));
		outcome.ctrl_loss_history.push_back(ctrl_loss / static_cast<double>(n));
	}

	if (!outcome.student.weights_finite() || !outcome.control_student.weights_finite()) {
		outcome.diverged = true;
		return outcome;
	}
	outcome.acc_p = accuracy(outcome.student, task.test_x, task.test_y);
	outcome.acc_s = accuracy(outcome.control_student, task.test_x, task.test_y);
	return outcome;
}

Tensor probe_deltas(const Network &teacher, const Network &student, const Tensor &probe_inputs) {
	const Tensor zt = teacher.forward(probe_inputs);
	Tensor zs = student.forward(probe_inputs);
	if (zt.rows() != zs.rows() || zt.cols() != zs.cols())
		throw std::invalid_argument("probe_deltas: teacher and student disagree on logit shape");
	for (size_t i = 0; i < zs.size(); ++i)
		zs.data[i] -= zt.data[i];
	return zs;
}

} // namespace puffprint
