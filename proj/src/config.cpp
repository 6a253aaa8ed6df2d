#include "puffprint/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace puffprint {

namespace {

/// Wraps one JSON object; every accessor marks its key as consumed and
/// finish() rejects whatever was never asked for.
class StrictObject {
  public:
	StrictObject(const nlohmann::json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
		if (!obj_.is_object())
			throw std::invalid_argument("config: " + path_ + " must be a JSON object");
	}

	bool has(const std::string &key) const { return obj_.contains(key); }

	const nlohmann::json *take(const std::string &key) {
		seen_.insert(key);
		if (!obj_.contains(key))
			return nullptr;
		return &obj_.at(key);
	}

	template <typename T> T get(const std::string &key, T fallback) {
		const nlohmann::json *v = take(key);
		if (!v)
			return fallback;
		try {
			return v->get<T>();
		} catch (const nlohmann::json::exception &) {
			throw std::invalid_argument("config: bad value type for " + path_ + "." + key);
		}
	}

	template <typename T> T require(const std::string &key) {
		const nlohmann::json *v = take(key);
		if (!v)
			throw std::invalid_argument("config: missing required key " + path_ + "." + key);
		try {
			return v->get<T>();
		} catch (const nlohmann::json::exception &) {
			throw std::invalid_argument("config: bad value type for " + path_ + "." + key);
		}
	}

	void finish() const {
		for (auto it = obj_.begin(); it != obj_.end(); ++it)
			if (!seen_.count(it.key()))
				throw std::invalid_argument("config: unknown key " + path_ + "." + it.key());
	}

	const std::string &path() const { return path_; }

  private:
	const nlohmann::json &obj_;
	std::string path_;
	std::set<std::string> seen_;
};

void check_schema_version(StrictObject &o) {
	const auto version = o.require<int>("schema_version");
	if (version != 1)
		throw std::invalid_argument("config: unsupported schema_version " +
		                            std::to_string(version));
}

SchemeVariant parse_variant(const std::string &s, const std::string &where) {
	if (s == "one_bit")
		return SchemeVariant::OneBit;
	if (s == "compressed")
		return SchemeVariant::Compressed;
	throw std::invalid_argument("config: " + where + " must be \"one_bit\" or \"compressed\"");
}

TrainConfig parse_train(const nlohmann::json *node, const std::string &path,
                        const TrainConfig &defaults) {
	TrainConfig cfg = defaults;
	if (!node)
		return cfg;
	StrictObject o(*node, path);
	cfg.learning_rate = o.get<double>("learning_rate", cfg.learning_rate);
	cfg.lr_decay = o.get<double>("lr_decay", cfg.lr_decay);
	cfg.average_tail_epochs = o.get<size_t>("average_tail_epochs", cfg.average_tail_epochs);
	cfg.batch_size = o.get<size_t>("batch_size", cfg.batch_size);
	cfg.max_epochs = o.get<size_t>("max_epochs", cfg.max_epochs);
	const std::string opt = o.get<std::string>(
	    "optimizer", cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd");
	if (opt == "adam")
		cfg.optimizer = OptimizerKind::Adam;
	else if (opt == "sgd")
		cfg.optimizer = OptimizerKind::Sgd;
	else
		throw std::invalid_argument("config: " + path + ".optimizer must be \"adam\" or \"sgd\"");
	cfg.adam_beta1 = o.get<double>("beta1", cfg.adam_beta1);
	cfg.adam_beta2 = o.get<double>("beta2", cfg.adam_beta2);
	cfg.adam_eps = o.get<double>("eps", cfg.adam_eps);
	cfg.early_stop_patience = o.get<size_t>("patience", cfg.early_stop_patience);
	cfg.validation_fraction = o.get<double>("validation_fraction", cfg.validation_fraction);
	cfg.rng_seed = o.get<uint64_t>("seed", cfg.rng_seed);
	o.finish();
	cfg.validate();
	return cfg;
}

nlohmann::ordered_json echo_train(const TrainConfig &cfg) {
	nlohmann::ordered_json t;
	t["learning_rate"] = cfg.learning_rate;
	t["lr_decay"] = cfg.lr_decay;
	t["average_tail_epochs"] = cfg.average_tail_epochs;
	t["batch_size"] = cfg.batch_size;
	t["max_epochs"] = cfg.max_epochs;
	t["optimizer"] = cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
	t["beta1"] = cfg.adam_beta1;
	t["beta2"] = cfg.adam_beta2;
	t["eps"] = cfg.adam_eps;
	t["patience"] = cfg.early_stop_patience;
	t["validation_fraction"] = cfg.validation_fraction;
	t["seed"] = cfg.rng_seed;
	return t;
}

TaskSpec parse_task(const nlohmann::json *node, const std::string &path, const TaskSpec &defaults) {
	TaskSpec spec = defaults;
	if (!node)
		return spec;
	StrictObject o(*node, path);
	spec.classes = o.get<size_t>("classes", spec.classes);
	spec.input_dim = o.get<size_t>("input_dim", spec.input_dim);
	spec.samples_per_class = o.get<size_t>("samples_per_class", spec.samples_per_class);
	spec.class_separation = o.get<double>("class_separation", spec.class_separation);
	spec.rng_seed = o.get<uint64_t>("seed", spec.rng_seed);
	o.finish();
	spec.validate();
	return spec;
}

nlohmann::ordered_json echo_task(const TaskSpec &spec) {
	nlohmann::ordered_json t;
	t["classes"] = spec.classes;
	t["input_dim"] = spec.input_dim;
	t["samples_per_class"] = spec.samples_per_class;
	t["class_separation"] = spec.class_separation;
	t["seed"] = spec.rng_seed;
	return t;
}

const char *variant_str(SchemeVariant v) {
	return v == SchemeVariant::OneBit ? "one_bit" : "compressed";
}

TrainConfig decoder_train_defaults() {
	TrainConfig cfg;
	cfg.learning_rate = 1e-3;
	cfg.batch_size = 256;
	cfg.max_epochs = 12;
	cfg.early_stop_patience = 3;
	return cfg;
}

TrainConfig teacher_train_defaults() {
	TrainConfig cfg;
	cfg.learning_rate = 3e-3;
	cfg.batch_size = 64;
	cfg.max_epochs = 40;
	cfg.early_stop_patience = 5;
	return cfg;
}

TrainConfig student_train_defaults() {
	TrainConfig cfg;
	cfg.learning_rate = 3e-3;
	cfg.batch_size = 64;
	cfg.max_epochs = 80;
	cfg.early_stop_patience = 0; // distillation runs a fixed epoch budget
	return cfg;
}

} // namespace

SynthFileConfig parse_synth_config(const nlohmann::json &doc) {
	StrictObject o(doc, "synth");
	check_schema_version(o);
	SynthFileConfig cfg;
	cfg.synth.n = o.get<size_t>("n", cfg.synth.n);
	cfg.synth.d = o.get<size_t>("d", cfg.synth.d);
	cfg.synth.devices = o.get<size_t>("devices", cfg.synth.devices);
	cfg.synth.samples_per_device = o.get<size_t>("samples_per_device", cfg.synth.samples_per_device);
	cfg.synth.epsilon_set = o.get<std::vector<double>>("epsilon_set", cfg.synth.epsilon_set);
	cfg.synth.sigma = o.get<double>("sigma", cfg.synth.sigma);
	cfg.synth.p_flip = o.get<double>("p_flip", cfg.synth.p_flip);
	if (const nlohmann::json *scheme = o.take("scheme")) {
		StrictObject s(*scheme, "synth.scheme");
		cfg.synth.variant = parse_variant(s.get<std::string>("variant", "one_bit"),
		                                  "synth.scheme.variant");
		cfg.synth.bits_per_logit = s.get<size_t>("bits_per_logit", cfg.synth.bits_per_logit);
		s.finish();
	}
	cfg.synth.rng_seed = o.get<uint64_t>("seed", cfg.synth.rng_seed);
	cfg.registry_path = o.get<std::string>("registry", "");
	if (const nlohmann::json *dec = o.take("decoder")) {
		StrictObject s(*dec, "synth.decoder");
		cfg.hidden = s.get<std::vector<size_t>>("hidden", cfg.hidden);
		s.finish();
	}
	TrainConfig train_defaults = decoder_train_defaults();
	train_defaults.rng_seed = Rng::derive_seed(cfg.synth.rng_seed, 0xDEC0DE);
	cfg.train = parse_train(o.take("train"), "synth.train", train_defaults);
	o.finish();
	cfg.synth.validate();
	return cfg;
}

nlohmann::ordered_json echo_synth_config(const SynthFileConfig &cfg) {
	nlohmann::ordered_json j;
	j["schema_version"] = 1;
	j["n"] = cfg.synth.n;
	j["d"] = cfg.synth.d;
	j["devices"] = cfg.synth.devices;
	j["samples_per_device"] = cfg.synth.samples_per_device;
	j["epsilon_set"] = cfg.synth.epsilon_set;
	j["sigma"] = cfg.synth.sigma;
	j["p_flip"] = cfg.synth.p_flip;
	j["scheme"] = {{"variant", variant_str(cfg.synth.variant)},
	               {"bits_per_logit", cfg.synth.bits_per_logit}};
	j["seed"] = cfg.synth.rng_seed;
	j["registry"] = cfg.registry_path;
	j["decoder"] = {{"hidden", cfg.hidden}};
	j["train"] = echo_train(cfg.train);
	return j;
}

DistillFileConfig parse_distill_config(const nlohmann::json &doc) {
	StrictObject o(doc, "run");
	check_schema_version(o);
	DistillFileConfig cfg;
	cfg.task = parse_task(o.take("task"), "run.task", cfg.task);
	if (const nlohmann::json *t = o.take("teacher")) {
		StrictObject s(*t, "run.teacher");
		cfg.teacher_hidden = s.get<std::vector<size_t>>("hidden", cfg.teacher_hidden);
		cfg.teacher_train = parse_train(s.take("train"), "run.teacher.train",
		                                teacher_train_defaults());
		s.finish();
	} else {
		cfg.teacher_train = teacher_train_defaults();
	}
	if (const nlohmann::json *t = o.take("student")) {
		StrictObject s(*t, "run.student");
		cfg.student_hidden = s.get<std::vector<size_t>>("hidden", cfg.student_hidden);
		cfg.student_train = parse_train(s.take("train"), "run.student.train",
		                                student_train_defaults());
		s.finish();
	} else {
		cfg.student_train = student_train_defaults();
	}
	if (const nlohmann::json *scheme = o.take("scheme")) {
		StrictObject s(*scheme, "run.scheme");
		cfg.variant = parse_variant(s.get<std::string>("variant", "one_bit"), "run.scheme.variant");
		cfg.epsilon = s.get<double>("epsilon", cfg.epsilon);
		cfg.bits_per_logit = s.get<size_t>("bits_per_logit", cfg.bits_per_logit);
		s.finish();
	}
	cfg.p_flip = o.get<double>("p_flip", cfg.p_flip);
	cfg.temperature = o.get<double>("temperature", cfg.temperature);
	cfg.probes = o.get<size_t>("probes", cfg.probes);
	if (const nlohmann::json *q = o.take("quantize")) {
		StrictObject s(*q, "run.quantize");
		cfg.quant = QuantSpec(s.require<size_t>("bits"), s.require<double>("x_min"),
		                      s.require<double>("x_max"));
		s.finish();
	}
	cfg.seed = o.get<uint64_t>("seed", cfg.seed);
	o.finish();
	// fails early on an invalid scheme (epsilon = 0 and friends)
	EncodingScheme(cfg.variant, cfg.epsilon, cfg.bits_per_logit);
	return cfg;
}

nlohmann::ordered_json echo_distill_config(const DistillFileConfig &cfg) {
	nlohmann::ordered_json j;
	j["schema_version"] = 1;
	j["task"] = echo_task(cfg.task);
	j["teacher"] = {{"hidden", cfg.teacher_hidden}, {"train", echo_train(cfg.teacher_train)}};
	j["student"] = {{"hidden", cfg.student_hidden}, {"train", echo_train(cfg.student_train)}};
	j["scheme"] = {{"variant", variant_str(cfg.variant)},
	               {"epsilon", cfg.epsilon},
	               {"bits_per_logit", cfg.bits_per_logit}};
	j["p_flip"] = cfg.p_flip;
	j["temperature"] = cfg.temperature;
	j["probes"] = cfg.probes;
	if (cfg.quant)
		j["quantize"] = {{"bits", cfg.quant->m_bits},
		                 {"x_min", cfg.quant->x_min},
		                 {"x_max", cfg.quant->x_max}};
	j["seed"] = cfg.seed;
	return j;
}

SweepConfig parse_sweep_config(const nlohmann::json &doc) {
	StrictObject o(doc, "grid");
	check_schema_version(o);
	SweepConfig cfg;
	cfg.decoder_train = decoder_train_defaults();
	cfg.teacher_train = teacher_train_defaults();
	cfg.student_train = student_train_defaults();

	const std::string mode = o.get<std::string>("mode", "decoder_only");
	if (mode == "decoder_only")
		cfg.mode = SweepMode::DecoderOnly;
	else if (mode == "end_to_end")
		cfg.mode = SweepMode::EndToEnd;
	else
		throw std::invalid_argument("config: grid.mode must be decoder_only or end_to_end");

	if (const nlohmann::json *schemes = o.take("schemes")) {
		if (!schemes->is_array() || schemes->empty())
			throw std::invalid_argument("config: grid.schemes must be a non-empty array");
		cfg.schemes.clear();
		size_t idx = 0;
		for (const auto &entry : *schemes) {
			StrictObject s(entry, "grid.schemes[" + std::to_string(idx++) + "]");
			SweepSchemeSpec spec;
			spec.variant = parse_variant(s.get<std::string>("variant", "one_bit"), s.path());
			spec.bits_per_logit = s.get<size_t>("bits_per_logit", 1);
			spec.d = s.get<size_t>("d", 10);
			spec.n = s.get<size_t>("n", spec.d * spec.bits_per_logit);
			s.finish();
			cfg.schemes.push_back(spec);
		}
	}
	cfg.epsilons = o.get<std::vector<double>>("epsilons", cfg.epsilons);
	cfg.p_flips = o.get<std::vector<double>>("p_flips", cfg.p_flips);
	cfg.sigma = o.get<double>("sigma", cfg.sigma);
	cfg.devices = o.get<size_t>("devices", cfg.devices);
	cfg.samples_per_device = o.get<size_t>("samples_per_device", cfg.samples_per_device);
	cfg.epsilon_train_set = o.get<std::vector<double>>("epsilon_train_set", cfg.epsilon_train_set);
	cfg.trials = o.get<size_t>("trials", cfg.trials);
	cfg.probes = o.get<size_t>("probes", cfg.probes);
	const std::string agg = o.get<std::string>("aggregation", "mean");
	if (agg == "mean")
		cfg.aggregation = ProbeAggregation::MeanProbability;
	else if (agg == "majority")
		cfg.aggregation = ProbeAggregation::MajorityVote;
	else if (agg == "mean_delta")
		cfg.aggregation = ProbeAggregation::MeanDelta;
	else
		throw std::invalid_argument(
		    "config: grid.aggregation must be mean, majority or mean_delta");
	if (const nlohmann::json *dec = o.take("decoder")) {
		StrictObject s(*dec, "grid.decoder");
		cfg.decoder_hidden = s.get<std::vector<size_t>>("hidden", cfg.decoder_hidden);
		cfg.decoder_ensemble = s.get<size_t>("ensemble", cfg.decoder_ensemble);
		cfg.decoder_train = parse_train(s.take("train"), "grid.decoder.train", cfg.decoder_train);
		s.finish();
	}
	cfg.task = parse_task(o.take("task"), "grid.task", cfg.task);
	if (const nlohmann::json *t = o.take("teacher")) {
		StrictObject s(*t, "grid.teacher");
		cfg.teacher_hidden = s.get<std::vector<size_t>>("hidden", cfg.teacher_hidden);
		cfg.teacher_train = parse_train(s.take("train"), "grid.teacher.train", cfg.teacher_train);
		s.finish();
	}
	if (const nlohmann::json *t = o.take("student")) {
		StrictObject s(*t, "grid.student");
		cfg.student_hidden = s.get<std::vector<size_t>>("hidden", cfg.student_hidden);
		cfg.student_train = parse_train(s.take("train"), "grid.student.train", cfg.student_train);
		s.finish();
	}
	cfg.kd_temperature = o.get<double>("temperature", cfg.kd_temperature);
	cfg.master_seed = o.get<uint64_t>("seed", cfg.master_seed);
	o.finish();
	cfg.validate();
	return cfg;
}

nlohmann::ordered_json echo_sweep_config(const SweepConfig &cfg) {
	nlohmann::ordered_json j;
	j["schema_version"] = 1;
	j["mode"] = cfg.mode == SweepMode::DecoderOnly ? "decoder_only" : "end_to_end";
	nlohmann::ordered_json schemes = nlohmann::ordered_json::array();
	for (const auto &s : cfg.schemes)
		schemes.push_back({{"variant", variant_str(s.variant)},
		                   {"n", s.n},
		                   {"d", s.d},
		                   {"bits_per_logit", s.bits_per_logit}});
	j["schemes"] = std::move(schemes);
	j["epsilons"] = cfg.epsilons;
	j["p_flips"] = cfg.p_flips;
	j["sigma"] = cfg.sigma;
	j["devices"] = cfg.devices;
	j["samples_per_device"] = cfg.samples_per_device;
	j["epsilon_train_set"] = cfg.epsilon_train_set;
	j["trials"] = cfg.trials;
	j["probes"] = cfg.probes;
	j["aggregation"] = cfg.aggregation == ProbeAggregation::MeanProbability ? "mean"
	                   : cfg.aggregation == ProbeAggregation::MajorityVote ? "majority"
	                                                                       : "mean_delta";
	j["decoder"] = {{"hidden", cfg.decoder_hidden},
	                {"ensemble", cfg.decoder_ensemble},
	                {"train", echo_train(cfg.decoder_train)}};
	if (cfg.mode == SweepMode::EndToEnd) {
		j["task"] = echo_task(cfg.task);
		j["teacher"] = {{"hidden", cfg.teacher_hidden}, {"train", echo_train(cfg.teacher_train)}};
		j["student"] = {{"hidden", cfg.student_hidden}, {"train", echo_train(cfg.student_train)}};
		j["temperature"] = cfg.kd_temperature;
	}
	j["seed"] = cfg.master_seed;
	return j;
}

nlohmann::json load_json_file(const std::string &path) {
	std::ifstream in(path);
	if (!in)
		throw std::invalid_argument("config: cannot open " + path);
	nlohmann::json doc;
	try {
		in >> doc;
	} catch (const nlohmann::json::exception &ex) {
		throw std::invalid_argument("config: " + path + " is not valid JSON: " + ex.what());
	}
	return doc;
}

void write_text_file(const std::string &path, const std::string &content) {
	std::ofstream out(path);
	if (!out)
		throw std::runtime_error("cannot open " + path + " for writing");
	out << content;
	if (!out)
		throw std::runtime_error("write to " + path + " failed");
}

} // namespace puffprint
