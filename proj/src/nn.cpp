#include "puffprint/nn.hpp"

#include <algorithm>
#include <deque>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "puffprint/kernels.hpp"

namespace puffprint {

namespace {

constexpr double kProbClamp = 1e-7;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_same_shape(const Tensor &a, const Tensor &b, const char *what) {
	if (a.rows() != b.rows() || a.cols() != b.cols())
		throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

} // namespace

void Network::add_dense(size_t in, size_t out, Rng &rng) {
	if (in == 0 || out == 0)
		throw std::invalid_argument("add_dense: zero dimension");
	if (!layers.empty() && output_dim() != in)
		throw std::invalid_argument("add_dense: input width does not chain");
	Layer l;
	l.kind = LayerKind::Dense;
	l.in = in;
	l.out = out;
	l.w.resize(in * out);
	l.b.assign(out, 0.0);
	// He-style fan-in uniform init
	const double limit = std::sqrt(6.0 / static_cast<double>(in));
	for (auto &v : l.w)
		v = rng.uniform(-limit, limit);
	layers.push_back(std::move(l));
}

void Network::add_relu() {
	if (layers.empty())
		throw std::invalid_argument("add_relu: activation needs a preceding layer");
	Layer l;
	l.kind = LayerKind::ReLU;
	layers.push_back(std::move(l));
}

void Network::add_sigmoid() {
	if (layers.empty())
		throw std::invalid_argument("add_sigmoid: activation needs a preceding layer");
	Layer l;
	l.kind = LayerKind::Sigmoid;
	layers.push_back(std::move(l));
}

void Network::add_softmax_t(double temperature) {
	if (layers.empty())
		throw std::invalid_argument("add_softmax_t: activation needs a preceding layer");
	if (!(temperature > 0.0) || !std::isfinite(temperature))
		throw std::invalid_argument("add_softmax_t: temperature must be positive");
	Layer l;
	l.kind = LayerKind::SoftmaxT;
	l.temperature = temperature;
	layers.push_back(std::move(l));
}

size_t Network::input_dim() const {
	for (const auto &l : layers)
		if (l.kind == LayerKind::Dense)
			return l.in;
	return 0;
}

size_t Network::output_dim() const {
	for (auto it = layers.rbegin(); it != layers.rend(); ++it)
		if (it->kind == LayerKind::Dense)
			return it->out;
	return 0;
}

size_t Network::parameter_count() const {
	size_t n = 0;
	for (const auto &l : layers)
		n += l.w.size() + l.b.size();
	return n;
}

bool Network::weights_finite() const {
	for (const auto &l : layers) {
		for (double v : l.w)
			if (!std::isfinite(v))
				return false;
		for (double v : l.b)
			if (!std::isfinite(v))
				return false;
	}
	return true;
}

Tensor softmax_t(const Tensor &logits, double temperature) {
	if (!(temperature > 0.0) || !std::isfinite(temperature))
		throw std::invalid_argument("softmax_t: temperature must be positive");
	const size_t rows = logits.rows(), cols = logits.cols();
	Tensor out = Tensor::zeros(rows, cols);
	for (size_t r = 0; r < rows; ++r) {
		const double *x = logits.row_ptr(r);
		double *y = out.row_ptr(r);
		double mx = -std::numeric_limits<double>::infinity();
		for (size_t c = 0; c < cols; ++c)
			mx = std::max(mx, x[c] / temperature);
		double sum = 0.0;
		for (size_t c = 0; c < cols; ++c) {
			y[c] = std::exp(x[c] / temperature - mx);
			sum += y[c];
		}
		for (size_t c = 0; c < cols; ++c)
			y[c] /= sum;
	}
	return out;
}

static Tensor apply_layer(const Layer &l, const Tensor &x) {
	switch (l.kind) {
	case LayerKind::Dense: {
		if (x.cols() != l.in)
			throw std::invalid_argument("forward: input width " + std::to_string(x.cols()) +
			                            " does not match dense layer in=" + std::to_string(l.in));
		Tensor y = Tensor::zeros(x.rows(), l.out);
		kernels::matmul_nt(x.data.data(), l.w.data(), y.data.data(), x.rows(), l.in, l.out);
		kernels::add_bias_rows(y.data.data(), l.b.data(), y.rows(), y.cols());
		return y;
	}
	case LayerKind::ReLU: {
		Tensor y = Tensor::zeros(x.rows(), x.cols());
		kernels::relu_forward(x.data.data(), y.data.data(), x.size());
		return y;
	}
	case LayerKind::Sigmoid: {
		Tensor y = Tensor::zeros(x.rows(), x.cols());
		kernels::sigmoid_forward(x.data.data(), y.data.data(), x.size());
		return y;
	}
	case LayerKind::SoftmaxT:
		return softmax_t(x, l.temperature);
	}
	throw std::logic_error("apply_layer: unknown layer kind");
}

Tensor Network::forward_cached(const Tensor &input, std::vector<Tensor> &acts) const {
	if (layers.empty())
		throw std::invalid_argument("forward: empty network");
	acts.clear();
	acts.reserve(layers.size() + 1);
	Tensor cur = input;
	if (activation_quant)
		quantize(cur.data, *activation_quant);
	acts.push_back(cur);
	for (const auto &l : layers) {
		cur = apply_layer(l, acts.back());
		if (activation_quant)
			quantize(cur.data, *activation_quant);
		acts.push_back(cur);
	}
	if (!acts.back().all_finite())
		throw std::runtime_error("forward: non-finite network output");
	return acts.back();
}

Tensor Network::forward(const Tensor &input) const {
	if (layers.empty())
		throw std::invalid_argument("forward: empty network");
	Tensor cur = input;
	if (activation_quant)
		quantize(cur.data, *activation_quant);
	for (const auto &l : layers) {
		cur = apply_layer(l, cur);
		if (activation_quant)
			quantize(cur.data, *activation_quant);
	}
	if (!cur.all_finite())
		throw std::runtime_error("forward: non-finite network output");
	return cur;
}

Gradients Gradients::zeros_like(const Network &net) {
	Gradients g;
	g.w.resize(net.layers.size());
	g.b.resize(net.layers.size());
	for (size_t i = 0; i < net.layers.size(); ++i) {
		g.w[i].assign(net.layers[i].w.size(), 0.0);
		g.b[i].assign(net.layers[i].b.size(), 0.0);
	}
	return g;
}

Gradients backward(const Network &net, const std::vector<Tensor> &acts, const Tensor &grad_output,
                   Tensor *grad_input) {
	if (net.activation_quant)
		throw std::invalid_argument("backward: network is in quantized inference mode");
	if (acts.size() != net.layers.size() + 1)
		throw std::invalid_argument("backward: activation cache does not match network");
	Gradients grads = Gradients::zeros_like(net);
	Tensor delta = grad_output;
	for (size_t li = net.layers.size(); li-- > 0;) {
		const Layer &l = net.layers[li];
		const Tensor &x = acts[li];
		const Tensor &y = acts[li + 1];
		switch (l.kind) {
		case LayerKind::Dense: {
			const size_t batch = x.rows();
			// dW = delta^T * x, db = column sums of delta
			kernels::matmul_tn(delta.data.data(), x.data.data(), grads.w[li].data(), l.out, batch,
			                   l.in);
			for (size_t r = 0; r < batch; ++r) {
				const double *dr = delta.row_ptr(r);
				for (size_t c = 0; c < l.out; ++c)
					grads.b[li][c] += dr[c];
			}
			if (li > 0 || grad_input) {
				Tensor dx = Tensor::zeros(batch, l.in);
				kernels::matmul_nn(delta.data.data(), l.w.data(), dx.data.data(), batch, l.out,
				                   l.in);
				delta = std::move(dx);
			}
			break;
		}
		case LayerKind::ReLU: {
			Tensor dx = Tensor::zeros(delta.rows(), delta.cols());
			kernels::relu_backward(x.data.data(), delta.data.data(), dx.data.data(), x.size());
			delta = std::move(dx);
			break;
		}
		case LayerKind::Sigmoid: {
			Tensor dx = Tensor::zeros(delta.rows(), delta.cols());
			kernels::sigmoid_backward(y.data.data(), delta.data.data(), dx.data.data(), y.size());
			delta = std::move(dx);
			break;
		}
		case LayerKind::SoftmaxT: {
			Tensor dx = Tensor::zeros(delta.rows(), delta.cols());
			for (size_t r = 0; r < delta.rows(); ++r) {
				const double *yr = y.row_ptr(r);
				const double *dr = delta.row_ptr(r);
				double dot = 0.0;
				for (size_t c = 0; c < delta.cols(); ++c)
					dot += dr[c] * yr[c];
				double *out = dx.row_ptr(r);
				for (size_t c = 0; c < delta.cols(); ++c)
					out[c] = yr[c] * (dr[c] - dot) / l.temperature;
			}
			delta = std::move(dx);
			break;
		}
		}
	}
	if (grad_input)
		*grad_input = std::move(delta);
	return grads;
}

Network make_mlp(size_t input, const std::vector<size_t> &hidden, size_t output, Rng &rng,
                 bool sigmoid_output) {
	Network net;
	size_t prev = input;
	for (size_t h : hidden) {
		net.add_dense(prev, h, rng);
		net.add_relu();
		prev = h;
	}
	net.add_dense(prev, output, rng);
	if (sigmoid_output)
		net.add_sigmoid();
	return net;
}

// ---- losses ---------------------------------------------------------------

double loss_mse(const Tensor &pred, const Tensor &target, Tensor *grad) {
	check_same_shape(pred, target, "loss_mse");
	const double scale = 1.0 / static_cast<double>(pred.cols());
	const double bscale = 1.0 / static_cast<double>(pred.rows());
	if (grad)
		*grad = Tensor::zeros(pred.rows(), pred.cols());
	double total = 0.0;
	for (size_t i = 0; i < pred.size(); ++i) {
		const double diff = pred.data[i] - target.data[i];
		total += diff * diff;
		if (grad)
			grad->data[i] = 2.0 * diff * scale * bscale;
	}
	return total * scale * bscale;
}

double loss_bce(const Tensor &pred, const Tensor &target, Tensor *grad) {
	check_same_shape(pred, target, "loss_bce");
	for (double t : target.data)
		if (t != 0.0 && t != 1.0)
			throw std::invalid_argument("loss_bce: targets must be 0 or 1");
	const double scale = 1.0 / static_cast<double>(pred.size());
	if (grad)
		*grad = Tensor::zeros(pred.rows(), pred.cols());
	double total = 0.0;
	for (size_t i = 0; i < pred.size(); ++i) {
		const double p = clamp_prob(pred.data[i]);
		const double k = target.data[i];
		total -= k * std::log(p) + (1.0 - k) * std::log(1.0 - p);
		if (grad)
			grad->data[i] = (p - k) / (p * (1.0 - p)) * scale;
	}
	return total * scale;
}

double loss_ce(const Tensor &logits, const Tensor &target, Tensor *grad) {
	if (target.rows() != logits.rows() || target.cols() != 1)
		throw std::invalid_argument("loss_ce: target must hold one class index per row");
	const size_t d = logits.cols();
	const Tensor probs = softmax_t(logits, 1.0);
	const double bscale = 1.0 / static_cast<double>(logits.rows());
	if (grad)
		*grad = Tensor::zeros(logits.rows(), logits.cols());
	double total = 0.0;
	for (size_t r = 0; r < logits.rows(); ++r) {
		const double raw = target.at(r, 0);
		const auto cls = static_cast<size_t>(raw);
		if (raw < 0.0 || cls >= d || static_cast<double>(cls) != raw)
			throw std::invalid_argument("loss_ce: class index out of range");
		total -= std::log(clamp_prob(probs.at(r, cls)));
		if (grad) {
			for (size_t c = 0; c < d; ++c)
				grad->at(r, c) = (probs.at(r, c) - (c == cls ? 1.0 : 0.0)) * bscale;
		}
	}
	return total * bscale;
}

double loss_kd(const Tensor &teacher_logits, const Tensor &student_logits, double temperature,
               Tensor *grad_student) {
	check_same_shape(teacher_logits, student_logits, "loss_kd");
	const Tensor pt = softmax_t(teacher_logits, temperature);
	const Tensor ps = softmax_t(student_logits, temperature);
	const double t2 = temperature * temperature;
	const double bscale = 1.0 / static_cast<double>(teacher_logits.rows());
	if (grad_student)
		*grad_student = Tensor::zeros(student_logits.rows(), student_logits.cols());
	double total = 0.0;
	for (size_t i = 0; i < pt.size(); ++i) {
		const double p = clamp_prob(pt.data[i]);
		const double q = clamp_prob(ps.data[i]);
		total += p * (std::log(p) - std::log(q));
		// d/dz_s of T^2 * KL = T * (p_s - p_t)
		if (grad_student)
			grad_student->data[i] = temperature * (ps.data[i] - pt.data[i]) * bscale;
	}
	return t2 * total * bscale;
}

double loss_value_grad(const LossSpec &spec, const Tensor &pred, const Tensor &target,
                       Tensor *grad) {
	switch (spec.kind) {
	case LossKind::Mse:
		return loss_mse(pred, target, grad);
	case LossKind::Bce:
		return loss_bce(pred, target, grad);
	case LossKind::CrossEntropy:
		return loss_ce(pred, target, grad);
	case LossKind::Kd:
		// convention: target rows are the teacher logits
		return loss_kd(target, pred, spec.temperature, grad);
	}
	throw std::logic_error("loss_value_grad: unknown loss kind");
}

// ---- training ---------------------------------------------------------------

void TrainConfig::validate() const {
	if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
		throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
	if (!(lr_decay > 0.0 && lr_decay <= 1.0))
		throw std::invalid_argument("TrainConfig: lr_decay must lie in (0, 1]");
	if (batch_size == 0)
		throw std::invalid_argument("TrainConfig: batch_size must be at least 1");
	if (!(validation_fraction > 0.0 && validation_fraction < 1.0) && early_stop_patience > 0)
		throw std::invalid_argument("TrainConfig: validation_fraction must lie in (0, 1)");
	if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
		throw std::invalid_argument("TrainConfig: Adam betas must lie in [0, 1)");
}

namespace {

struct AdamState {
	std::vector<std::vector<double>> mw, vw, mb, vb;
	size_t step = 0;

	explicit AdamState(const Network &net) {
		mw.resize(net.layers.size());
		vw.resize(net.layers.size());
		mb.resize(net.layers.size());
		vb.resize(net.layers.size());
		for (size_t i = 0; i < net.layers.size(); ++i) {
			mw[i].assign(net.layers[i].w.size(), 0.0);
			vw[i].assign(net.layers[i].w.size(), 0.0);
			mb[i].assign(net.layers[i].b.size(), 0.0);
			vb[i].assign(net.layers[i].b.size(), 0.0);
		}
	}
};

void adam_update(std::vector<double> &param, const std::vector<double> &grad,
                 std::vector<double> &m, std::vector<double> &v, const TrainConfig &cfg,
                 double lr, double bc1, double bc2) {
	for (size_t i = 0; i < param.size(); ++i) {
		m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
		v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
		const double mhat = m[i] / bc1;
		const double vhat = v[i] / bc2;
		param[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
	}
}

void sgd_update(std::vector<double> &param, const std::vector<double> &grad, double lr) {
	for (size_t i = 0; i < param.size(); ++i)
		param[i] -= lr * grad[i];
}

Tensor gather_rows(const Tensor &src, const std::vector<size_t> &idx, size_t begin, size_t end) {
	Tensor out = Tensor::zeros(end - begin, src.cols());
	for (size_t r = begin; r < end; ++r)
		std::copy(src.row_ptr(idx[r]), src.row_ptr(idx[r]) + src.cols(), out.row_ptr(r - begin));
	return out;
}

double dataset_loss(const Network &net, const Tensor &x, const Tensor &y, const LossSpec &loss) {
	return loss_value_grad(loss, net.forward(x), y, nullptr);
}

std::vector<std::pair<std::vector<double>, std::vector<double>>> snapshot(const Network &net) {
	std::vector<std::pair<std::vector<double>, std::vector<double>>> s;
	for (const auto &l : net.layers)
		s.emplace_back(l.w, l.b);
	return s;
}

void restore(Network &net, const std::vector<std::pair<std::vector<double>, std::vector<double>>> &s) {
	for (size_t i = 0; i < net.layers.size(); ++i) {
		net.layers[i].w = s[i].first;
		net.layers[i].b = s[i].second;
	}
}

} // namespace

TrainResult train(Network &net, const Tensor &inputs, const Tensor &targets, const LossSpec &loss,
                  const TrainConfig &cfg) {
	cfg.validate();
	if (net.activation_quant)
		throw std::invalid_argument("train: network is in quantized inference mode");
	if (inputs.rows() == 0)
		throw std::invalid_argument("train: empty dataset");
	if (inputs.rows() != targets.rows())
		throw std::invalid_argument("train: inputs and targets disagree on row count");
	if (inputs.cols() != net.input_dim())
		throw std::invalid_argument("train: input width does not match network");

	TrainResult result;
	result.best_val_loss = std::numeric_limits<double>::infinity();
	if (cfg.max_epochs == 0) {
		result.train_loss.push_back(dataset_loss(net, inputs, targets, loss));
		return result;
	}

	Rng rng(cfg.rng_seed);
	const size_t n = inputs.rows();
	std::vector<size_t> order(n);
	for (size_t i = 0; i < n; ++i)
		order[i] = i;

	// held-out split for early stopping
	size_t val_count = 0;
	if (cfg.early_stop_patience > 0 && n >= 2) {
		for (size_t i = n - 1; i > 0; --i)
			std::swap(order[i], order[rng.below(i + 1)]);
		val_count = std::min<size_t>(
		    n - 1, std::max<size_t>(1, static_cast<size_t>(std::ceil(
		                                   static_cast<double>(n) * cfg.validation_fraction))));
	}
	std::vector<size_t> val_idx(order.begin(), order.begin() + static_cast<long>(val_count));
	std::vector<size_t> train_idx(order.begin() + static_cast<long>(val_count), order.end());
	const Tensor val_x = val_count ? gather_rows(inputs, val_idx, 0, val_count) : Tensor{};
	const Tensor val_y = val_count ? gather_rows(targets, val_idx, 0, val_count) : Tensor{};

	AdamState adam(net);
	auto best = snapshot(net);
	size_t stale = 0;
	std::deque<std::vector<std::pair<std::vector<double>, std::vector<double>>>> tail;

	double lr = cfg.learning_rate;
	for (size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
		if (epoch > 0)
			lr *= cfg.lr_decay;
		for (size_t i = train_idx.size() - 1; i > 0; --i)
			std::swap(train_idx[i], train_idx[rng.below(i + 1)]);

		double epoch_loss = 0.0;
		for (size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
			const size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
			const Tensor bx = gather_rows(inputs, train_idx, start, stop);
			const Tensor by = gather_rows(targets, train_idx, start, stop);

			std::vector<Tensor> acts;
			const Tensor out = net.forward_cached(bx, acts);
			Tensor grad;
			const double batch_loss = loss_value_grad(loss, out, by, &grad);
			if (!std::isfinite(batch_loss)) {
				result.train_loss.push_back(batch_loss);
				result.diverged = true;
				result.epochs_run = epoch;
				return result;
			}
			epoch_loss += batch_loss * static_cast<double>(stop - start);

			const Gradients grads = backward(net, acts, grad);
			adam.step += 1;
			const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
			const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
			for (size_t li = 0; li < net.layers.size(); ++li) {
				Layer &l = net.layers[li];
				if (l.kind != LayerKind::Dense)
					continue;
				if (cfg.optimizer == OptimizerKind::Adam) {
					adam_update(l.w, grads.w[li], adam.mw[li], adam.vw[li], cfg, lr, bc1, bc2);
					adam_update(l.b, grads.b[li], adam.mb[li], adam.vb[li], cfg, lr, bc1, bc2);
				} else {
					sgd_update(l.w, grads.w[li], lr);
					sgd_update(l.b, grads.b[li], lr);
				}
			}
		}
		result.train_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));
		result.epochs_run = epoch + 1;

		if (!net.weights_finite()) {
			result.diverged = true;
			return result;
		}

		if (cfg.average_tail_epochs > 0) {
			tail.push_back(snapshot(net));
			if (tail.size() > cfg.average_tail_epochs)
				tail.pop_front();
		}

		if (val_count) {
			const double vl = dataset_loss(net, val_x, val_y, loss);
			result.val_loss.push_back(vl);
			if (vl < result.best_val_loss) {
				result.best_val_loss = vl;
				best = snapshot(net);
				stale = 0;
			} else if (++stale >= cfg.early_stop_patience) {
				break;
			}
		}
	}

	if (cfg.average_tail_epochs > 0 && !tail.empty()) {
		auto avg = tail.front();
		for (size_t s = 1; s < tail.size(); ++s)
			for (size_t li = 0; li < avg.size(); ++li) {
				for (size_t i = 0; i < avg[li].first.size(); ++i)
					avg[li].first[i] += tail[s][li].first[i];
				for (size_t i = 0; i < avg[li].second.size(); ++i)
					avg[li].second[i] += tail[s][li].second[i];
			}
		const double inv = 1.0 / static_cast<double>(tail.size());
		for (auto &layer : avg) {
			for (double &v : layer.first)
				v *= inv;
			for (double &v : layer.second)
				v *= inv;
		}
		restore(net, avg);
	} else if (val_count) {
		restore(net, best);
	}
	return result;
}

void quantize_weights(Network &net, const QuantSpec &spec) {
	for (auto &l : net.layers) {
		quantize(l.w, spec);
		quantize(l.b, spec);
	}
}

double accuracy(const Network &net, const Tensor &inputs, const Tensor &labels) {
	if (labels.rows() != inputs.rows() || labels.cols() != 1)
		throw std::invalid_argument("accuracy: labels must hold one class index per row");
	const Tensor out = net.forward(inputs);
	size_t hits = 0;
	for (size_t r = 0; r < out.rows(); ++r) {
		const double *row = out.row_ptr(r);
		size_t arg = 0;
		for (size_t c = 1; c < out.cols(); ++c)
			if (row[c] > row[arg])
				arg = c;
		if (static_cast<double>(arg) == labels.at(r, 0))
			++hits;
	}
	return static_cast<double>(hits) / static_cast<double>(out.rows());
}

// ---- checkpoint IO ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'F', 'N', 'N'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream &out, uint32_t v) {
	char buf[4];
	for (int i = 0; i < 4; ++i)
		buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
	out.write(buf, 4);
}

void put_u64(std::ostream &out, uint64_t v) {
	char buf[8];
	for (int i = 0; i < 8; ++i)
		buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
	out.write(buf, 8);
}

void put_f64(std::ostream &out, double v) {
	uint64_t bits;
	std::memcpy(&bits, &v, 8);
	put_u64(out, bits);
}

uint32_t get_u32(std::istream &in) {
	unsigned char buf[4];
	in.read(reinterpret_cast<char *>(buf), 4);
	uint32_t v = 0;
	for (int i = 3; i >= 0; --i)
		v = (v << 8) | buf[i];
	return v;
}

uint64_t get_u64(std::istream &in) {
	unsigned char buf[8];
	in.read(reinterpret_cast<char *>(buf), 8);
	uint64_t v = 0;
	for (int i = 7; i >= 0; --i)
		v = (v << 8) | buf[i];
	return v;
}

double get_f64(std::istream &in) {
	const uint64_t bits = get_u64(in);
	double v;
	std::memcpy(&v, &bits, 8);
	return v;
}

} // namespace

void Network::save(const std::string &path) const {
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw std::runtime_error("Network::save: cannot open " + path);
	out.write(kMagic, 4);
	put_u32(out, kVersion);
	put_u32(out, activation_quant ? 1 : 0);
	if (activation_quant) {
		put_u32(out, static_cast<uint32_t>(activation_quant->m_bits));
		put_f64(out, activation_quant->x_min);
		put_f64(out, activation_quant->x_max);
	}
	put_u32(out, static_cast<uint32_t>(layers.size()));
	for (const auto &l : layers) {
		put_u32(out, static_cast<uint32_t>(l.kind));
		if (l.kind == LayerKind::Dense) {
			put_u64(out, l.in);
			put_u64(out, l.out);
		} else if (l.kind == LayerKind::SoftmaxT) {
			put_f64(out, l.temperature);
		}
	}
	for (const auto &l : layers) {
		for (double v : l.w)
			put_f64(out, v);
		for (double v : l.b)
			put_f64(out, v);
	}
	if (!out)
		throw std::runtime_error("Network::save: write to " + path + " failed");
}

Network Network::load(const std::string &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw std::runtime_error("Network::load: cannot open " + path);
	char magic[4];
	in.read(magic, 4);
	if (!in || std::memcmp(magic, kMagic, 4) != 0)
		throw std::runtime_error("Network::load: " + path + " is not a network checkpoint");
	const uint32_t version = get_u32(in);
	if (version != kVersion)
		throw std::runtime_error("Network::load: unsupported checkpoint version " +
		                         std::to_string(version));
	Network net;
	const uint32_t flags = get_u32(in);
	if (flags & 1) {
		QuantSpec q;
		q.m_bits = get_u32(in);
		q.x_min = get_f64(in);
		q.x_max = get_f64(in);
		net.activation_quant = q;
	}
	const uint32_t count = get_u32(in);
	for (uint32_t i = 0; i < count; ++i) {
		Layer l;
		l.kind = static_cast<LayerKind>(get_u32(in));
		if (l.kind == LayerKind::Dense) {
			l.in = get_u64(in);
			l.out = get_u64(in);
			l.w.resize(l.in * l.out);
			l.b.resize(l.out);
		} else if (l.kind == LayerKind::SoftmaxT) {
			l.temperature = get_f64(in);
		}
		net.layers.push_back(std::move(l));
	}
	for (auto &l : net.layers) {
		for (double &v : l.w)
			v = get_f64(in);
		for (double &v : l.b)
			v = get_f64(in);
	}
	if (!in)
		throw std::runtime_error("Network::load: truncated checkpoint " + path);
	return net;
}

} // namespace puffprint
