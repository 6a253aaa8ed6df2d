#include "puffprint/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "puffprint/nn.hpp"

namespace puffprint {

namespace {

// Architecture templates; every loss runs against each compatible template so
// all four layer kinds appear under all four losses.
enum class Arch { DenseOnly, DenseReluDense, DenseSigmoid, DenseReluDenseSigmoid, DenseSoftmaxT, DenseSigmoidDense };

const char *arch_name(Arch a) {
	switch (a) {
	case Arch::DenseOnly:
		return "dense";
	case Arch::DenseReluDense:
		return "dense-relu-dense";
	case Arch::DenseSigmoid:
		return "dense-sigmoid";
	case Arch::DenseReluDenseSigmoid:
		return "dense-relu-dense-sigmoid";
	case Arch::DenseSoftmaxT:
		return "dense-softmaxT";
	case Arch::DenseSigmoidDense:
		return "dense-sigmoid-dense";
	}
	return "?";
}

bool arch_outputs_probabilities(Arch a) {
	return a == Arch::DenseSigmoid || a == Arch::DenseReluDenseSigmoid || a == Arch::DenseSoftmaxT;
}

Network build_arch(Arch a, size_t in, size_t mid, size_t out, double temperature, Rng &rng) {
	Network net;
	switch (a) {
	case Arch::DenseOnly:
		net.add_dense(in, out, rng);
		break;
	case Arch::DenseReluDense:
		net.add_dense(in, mid, rng);
		net.add_relu();
		net.add_dense(mid, out, rng);
		break;
	case Arch::DenseSigmoid:
		net.add_dense(in, out, rng);
		net.add_sigmoid();
		break;
	case Arch::DenseReluDenseSigmoid:
		net.add_dense(in, mid, rng);
		net.add_relu();
		net.add_dense(mid, out, rng);
		net.add_sigmoid();
		break;
	case Arch::DenseSoftmaxT:
		net.add_dense(in, out, rng);
		net.add_softmax_t(temperature);
		break;
	case Arch::DenseSigmoidDense:
		net.add_dense(in, mid, rng);
		net.add_sigmoid();
		net.add_dense(mid, out, rng);
		break;
	}
	return net;
}

// ReLU pre-activations close to zero would invalidate the finite-difference
// oracle; report the margin so callers can resample.
double relu_margin(const Network &net, const std::vector<Tensor> &acts) {
	double margin = 1e300;
	for (size_t i = 0; i < net.layers.size(); ++i)
		if (net.layers[i].kind == LayerKind::ReLU)
			for (double v : acts[i].data)
				margin = std::min(margin, std::abs(v));
	return margin;
}

struct Problem {
	Network net;
	Tensor input;
	Tensor target;
	LossSpec loss;
};

double eval_loss(const Problem &p) {
	return loss_value_grad(p.loss, p.net.forward(p.input), p.target, nullptr);
}

double check_problem(Problem &p, double fd_step) {
	std::vector<Tensor> acts;
	const Tensor out = p.net.forward_cached(p.input, acts);
	Tensor grad_out;
	loss_value_grad(p.loss, out, p.target, &grad_out);
	Tensor grad_in;
	const Gradients grads = backward(p.net, acts, grad_out, &grad_in);

	double worst = 0.0;
	auto compare = [&](double analytic, double *slot) {
		const double saved = *slot;
		*slot = saved + fd_step;
		const double hi = eval_loss(p);
		*slot = saved - fd_step;
		const double lo = eval_loss(p);
		*slot = saved;
		const double fd = (hi - lo) / (2.0 * fd_step);
		const double rel =
		    std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
		worst = std::max(worst, rel);
	};

	for (size_t li = 0; li < p.net.layers.size(); ++li) {
		Layer &l = p.net.layers[li];
		for (size_t i = 0; i < l.w.size(); ++i)
			compare(grads.w[li][i], &l.w[i]);
		for (size_t i = 0; i < l.b.size(); ++i)
			compare(grads.b[li][i], &l.b[i]);
	}
	for (size_t i = 0; i < p.input.size(); ++i)
		compare(grad_in.data[i], &p.input.data[i]);
	return worst;
}

Problem make_problem(LossKind loss, Arch arch, Rng &rng) {
	const size_t in = 2 + rng.below(4);
	const size_t mid = 2 + rng.below(4);
	const size_t out = 2 + rng.below(4);
	const size_t batch = 1 + rng.below(3);
	const double temperature = 0.5 + 3.5 * rng.uniform();

	Problem p;
	p.net = build_arch(arch, in, mid, out, temperature, rng);
	p.input = Tensor::zeros(batch, in);
	for (auto &v : p.input.data)
		v = rng.normal();

	p.loss.kind = loss;
	p.loss.temperature = 1.0 + 3.0 * rng.uniform();
	switch (loss) {
	case LossKind::Mse:
		p.target = Tensor::zeros(batch, out);
		for (auto &v : p.target.data)
			v = arch_outputs_probabilities(arch) ? rng.uniform() : rng.normal();
		break;
	case LossKind::Bce:
		p.target = Tensor::zeros(batch, out);
		for (auto &v : p.target.data)
			v = rng.bernoulli(0.5) ? 1.0 : 0.0;
		break;
	case LossKind::CrossEntropy:
		p.target = Tensor::zeros(batch, 1);
		for (auto &v : p.target.data)
			v = static_cast<double>(rng.below(out));
		break;
	case LossKind::Kd:
		p.target = Tensor::zeros(batch, out);
		for (auto &v : p.target.data)
			v = rng.normal();
		break;
	}
	return p;
}

const char *loss_name(LossKind k) {
	switch (k) {
	case LossKind::Mse:
		return "mse";
	case LossKind::Bce:
		return "bce";
	case LossKind::CrossEntropy:
		return "ce";
	case LossKind::Kd:
		return "kd";
	}
	return "?";
}

} // namespace

std::vector<GradCheckCase> run_gradient_suite(size_t configs_per_case, uint64_t seed,
                                              double tolerance, double fd_step) {
	struct Combo {
		LossKind loss;
		Arch arch;
	};
	// BCE needs (0,1) predictions, CE/KD want raw logits; together the grid
	// exercises Dense, ReLU, Sigmoid and SoftmaxT under all four losses.
	const std::vector<Combo> combos = {
	    {LossKind::Mse, Arch::DenseOnly},
	    {LossKind::Mse, Arch::DenseReluDense},
	    {LossKind::Mse, Arch::DenseSigmoid},
	    {LossKind::Mse, Arch::DenseSoftmaxT},
	    {LossKind::Bce, Arch::DenseSigmoid},
	    {LossKind::Bce, Arch::DenseReluDenseSigmoid},
	    {LossKind::Bce, Arch::DenseSoftmaxT},
	    {LossKind::CrossEntropy, Arch::DenseOnly},
	    {LossKind::CrossEntropy, Arch::DenseReluDense},
	    {LossKind::CrossEntropy, Arch::DenseSigmoidDense},
	    {LossKind::Kd, Arch::DenseOnly},
	    {LossKind::Kd, Arch::DenseReluDense},
	    {LossKind::Kd, Arch::DenseSigmoidDense},
	};

	std::vector<GradCheckCase> cases;
	uint64_t stream = 0;
	for (const auto &combo : combos) {
		GradCheckCase c;
		c.name = std::string(loss_name(combo.loss)) + "/" + arch_name(combo.arch);
		size_t done = 0;
		uint64_t attempt = 0;
		while (done < configs_per_case) {
			Rng rng = Rng::derive(seed, (stream << 20) + attempt++);
			Problem p = make_problem(combo.loss, combo.arch, rng);
			std::vector<Tensor> acts;
			p.net.forward_cached(p.input, acts);
			if (relu_margin(p.net, acts) < 1e-3)
				continue; // too close to the ReLU kink for finite differences
			c.max_rel_err = std::max(c.max_rel_err, check_problem(p, fd_step));
			++done;
		}
		c.configs = done;
		c.pass = c.max_rel_err < tolerance;
		cases.push_back(std::move(c));
		++stream;
	}
	return cases;
}

} // namespace puffprint
