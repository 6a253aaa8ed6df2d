#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "puffprint/decoder.hpp"
#include "puffprint/distill.hpp"
#include "puffprint/eval.hpp"

namespace puffprint {

// JSON config parsing for the CLI. Parsing is strict: a missing or wrong
// schema_version and any unknown key are validation errors, so typos cannot
// silently fall back to defaults. Each parse has a matching echo_* that
// serializes the fully resolved configuration (defaults and seeds included).

struct SynthFileConfig {
	SynthConfig synth;
	TrainConfig train;
	std::vector<size_t> hidden = {128, 128};
	std::string registry_path; // empty: generate R keys from the synth seed
};

struct DistillFileConfig {
	TaskSpec task;
	std::vector<size_t> teacher_hidden = {64, 64};
	std::vector<size_t> student_hidden = {32};
	TrainConfig teacher_train;
	TrainConfig student_train;
	SchemeVariant variant = SchemeVariant::OneBit;
	double epsilon = 0.05;
	size_t bits_per_logit = 1;
	double p_flip = 0.05;
	double temperature = 0.0;
	size_t probes = 256;
	std::optional<QuantSpec> quant;
	uint64_t seed = 1;
};

SynthFileConfig parse_synth_config(const nlohmann::json &doc);
nlohmann::ordered_json echo_synth_config(const SynthFileConfig &cfg);

DistillFileConfig parse_distill_config(const nlohmann::json &doc);
nlohmann::ordered_json echo_distill_config(const DistillFileConfig &cfg);

SweepConfig parse_sweep_config(const nlohmann::json &doc);
nlohmann::ordered_json echo_sweep_config(const SweepConfig &cfg);

nlohmann::json load_json_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

} // namespace puffprint
