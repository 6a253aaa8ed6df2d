// puffprint: fingerprint simulated device keys into distilled models and
// trace them back. Subcommands cover the whole lifecycle:
// keygen -> train-decoder -> distill -> decode, plus sweep and nn selftest.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "puffprint/config.hpp"
#include "puffprint/eval.hpp"
#include "puffprint/gradcheck.hpp"
#include "puffprint/kernels.hpp"

namespace fs = std::filesystem;
using namespace puffprint;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;   // validation / configuration errors
constexpr int kExitRuntime = 2; // IO and training failures

void echo_config_file(const fs::path &path, const nlohmann::ordered_json &config) {
	write_text_file(path.string(), config.dump(2) + "\n");
}

Tensor read_probes_csv(const std::string &path) {
	std::ifstream in(path);
	if (!in)
		throw std::invalid_argument("cannot open probe file " + path);
	std::vector<double> values;
	size_t cols = 0, rows = 0;
	std::string line;
	while (std::getline(in, line)) {
		if (line.empty())
			continue;
		std::stringstream ss(line);
		std::string cell;
		size_t this_cols = 0;
		while (std::getline(ss, cell, ',')) {
			try {
				values.push_back(std::stod(cell));
			} catch (const std::exception &) {
				throw std::invalid_argument(path + ": bad number '" + cell + "'");
			}
			++this_cols;
		}
		if (cols == 0)
			cols = this_cols;
		else if (this_cols != cols)
			throw std::invalid_argument(path + ": ragged row widths");
		++rows;
	}
	if (rows == 0)
		throw std::invalid_argument(path + ": no probe rows");
	return Tensor({rows, cols}, std::move(values));
}

void write_probes_csv(const fs::path &path, const Tensor &deltas) {
	std::ostringstream out;
	char buf[64];
	for (size_t r = 0; r < deltas.rows(); ++r) {
		for (size_t c = 0; c < deltas.cols(); ++c) {
			std::snprintf(buf, sizeof buf, "%.17g", deltas.at(r, c));
			out << (c ? "," : "") << buf;
		}
		out << "\n";
	}
	write_text_file(path.string(), out.str());
}

nlohmann::ordered_json recovery_to_json(const RecoveryResult &res) {
	nlohmann::ordered_json j;
	j["schema_version"] = 1;
	j["predicted_raw"] = {{"bits", res.predicted_raw.to_bit_string()},
	                      {"hex", res.predicted_raw.to_hex()}};
	j["recovered"] = {{"bits", res.recovered.to_bit_string()}, {"hex", res.recovered.to_hex()}};
	j["device_id"] = res.device_id;
	j["distance"] = res.distance;
	j["tie_flag"] = res.tie_flag;
	if (res.stage1_hamming_to_truth)
		j["stage1_hamming_to_truth"] = *res.stage1_hamming_to_truth;
	else
		j["stage1_hamming_to_truth"] = nullptr;
	return j;
}

int cmd_keygen(size_t bits, size_t devices, uint64_t seed, const std::string &out) {
	const KeyRegistry registry = generate_registry(bits, devices, seed);
	registry.save(out);
	nlohmann::ordered_json cfg;
	cfg["schema_version"] = 1;
	cfg["command"] = "keygen";
	cfg["bits"] = bits;
	cfg["devices"] = devices;
	cfg["seed"] = seed;
	cfg["out"] = out;
	echo_config_file(out + ".config.json", cfg);
	std::cerr << "wrote " << devices << " " << bits << "-bit keys to " << out << "\n";
	return kExitOk;
}

int cmd_train_decoder(const std::string &config_path, const std::string &out) {
	const SynthFileConfig cfg = parse_synth_config(load_json_file(config_path));
	const KeyRegistry registry =
	    cfg.registry_path.empty()
	        ? generate_registry(cfg.synth.n, cfg.synth.devices,
	                            Rng::derive_seed(cfg.synth.rng_seed, 0x5EED))
	        : KeyRegistry::load(cfg.registry_path);

	const SynthDataset dataset = build_synthetic_dataset(cfg.synth, registry);
	const DecoderTrainOutcome outcome = train_decoder(dataset, cfg.train, cfg.hidden);
	if (outcome.train.diverged) {
		std::cerr << "decoder training diverged after " << outcome.train.epochs_run
		          << " epochs\n";
		return kExitRuntime;
	}
	outcome.net.save(out);
	echo_config_file(out + ".config.json", echo_synth_config(cfg));
	std::cerr << "decoder: " << outcome.train.epochs_run << " epochs, validation bit accuracy "
	          << outcome.val_bit_accuracy * 100.0 << "%\n";
	return kExitOk;
}

int cmd_distill(const std::string &config_path, const std::string &registry_path,
                const std::string &leaker_id, const std::string &out_dir) {
	const DistillFileConfig cfg = parse_distill_config(load_json_file(config_path));
	const KeyRegistry registry = KeyRegistry::load(registry_path);
	const long leaker_idx = registry.find_id(leaker_id);
	if (leaker_idx < 0)
		throw std::invalid_argument("leaker device '" + leaker_id + "' is not in the registry");

	fs::create_directories(out_dir);
	echo_config_file(fs::path(out_dir) / "config.json", echo_distill_config(cfg));

	const TaskData task = make_task(cfg.task);
	const TeacherResult teacher =
	    train_teacher(task, cfg.teacher_hidden, cfg.teacher_train, cfg.quant);
	if (teacher.train.diverged) {
		std::cerr << "teacher training diverged\n";
		return kExitRuntime;
	}

	DistillRun run;
	run.scheme = EncodingScheme(cfg.variant, cfg.epsilon, cfg.bits_per_logit);
	run.leaker_key = registry.key(static_cast<size_t>(leaker_idx));
	run.noise = NoiseModel(cfg.p_flip, Rng::derive_seed(cfg.seed, 0xF11C));
	run.temperature = cfg.temperature;

	TrainConfig student_cfg = cfg.student_train;
	student_cfg.rng_seed = Rng::derive_seed(cfg.seed, 0x57D);
	const DistillOutcome outcome =
	    distill_student(teacher.net, run, task, cfg.student_hidden, student_cfg);
	if (outcome.diverged) {
		std::cerr << "student training diverged\n";
		return kExitRuntime;
	}

	teacher.net.save((fs::path(out_dir) / "teacher.bin").string());
	outcome.student.save((fs::path(out_dir) / "student.bin").string());
	outcome.control_student.save((fs::path(out_dir) / "control_student.bin").string());

	Tensor probe_x = Tensor::zeros(std::min(cfg.probes, task.test_x.rows()), task.test_x.cols());
	for (size_t r = 0; r < probe_x.rows(); ++r)
		std::copy(task.test_x.row_ptr(r), task.test_x.row_ptr(r) + task.test_x.cols(),
		          probe_x.row_ptr(r));
	write_probes_csv(fs::path(out_dir) / "probes.csv",
	                 probe_deltas(teacher.net, outcome.student, probe_x));

	nlohmann::ordered_json metrics;
	metrics["schema_version"] = 1;
	metrics["acc_s"] = outcome.acc_s * 100.0;
	metrics["acc_p"] = outcome.acc_p * 100.0;
	metrics["teacher_accuracy"] = teacher.test_accuracy * 100.0;
	metrics["epsilon"] = cfg.epsilon;
	metrics["p_flip"] = cfg.p_flip;
	metrics["seed"] = cfg.seed;
	metrics["leaker"] = leaker_id;
	write_text_file((fs::path(out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");

	std::cerr << "teacher acc " << teacher.test_accuracy * 100.0 << "%, student acc_p "
	          << outcome.acc_p * 100.0 << "%, control acc_s " << outcome.acc_s * 100.0 << "%\n";
	return kExitOk;
}

int cmd_decode(const std::string &decoder_path, bool analytic, const std::string &variant_name,
               size_t bits_per_logit, double epsilon, const std::string &registry_path,
               const std::string &probes_path, const std::string &aggregation_name,
               const std::string &truth_id) {
	const KeyRegistry registry = KeyRegistry::load(registry_path);
	const Tensor probes = read_probes_csv(probes_path);

	const PufKey *truth = nullptr;
	PufKey truth_key;
	if (!truth_id.empty()) {
		const long idx = registry.find_id(truth_id);
		if (idx < 0)
			throw std::invalid_argument("truth device '" + truth_id + "' is not in the registry");
		truth_key = registry.key(static_cast<size_t>(idx));
		truth = &truth_key;
	}

	RecoveryResult res;
	if (analytic) {
		const SchemeVariant variant = variant_name == "compressed" ? SchemeVariant::Compressed
		                                                           : SchemeVariant::OneBit;
		const EncodingScheme scheme(variant, epsilon, bits_per_logit);
		if (scheme.key_bits_for(probes.cols()) != registry.bit_length())
			throw std::invalid_argument("probe width and scheme do not match the registry bit-length");
		res = recover_analytic(scheme, probes, registry, truth);
	} else {
		if (decoder_path.empty())
			throw std::invalid_argument("either --decoder or --analytic is required");
		const Network decoder = Network::load(decoder_path);
		if (decoder.input_dim() != probes.cols())
			throw std::invalid_argument("probe width does not match the decoder input");
		if (decoder.output_dim() != registry.bit_length())
			throw std::invalid_argument("decoder output does not match the registry bit-length");
		ProbeAggregation agg = ProbeAggregation::MeanProbability;
		if (aggregation_name == "majority")
			agg = ProbeAggregation::MajorityVote;
		else if (aggregation_name == "mean_delta")
			agg = ProbeAggregation::MeanDelta;
		else if (aggregation_name != "mean")
			throw std::invalid_argument("--aggregation must be mean, majority or mean_delta");
		res = recover(decoder, probes, registry, truth, agg);
	}
	std::cout << recovery_to_json(res).dump(2) << "\n";
	return kExitOk;
}

int cmd_sweep(const std::string &grid_path, std::optional<uint64_t> seed_flag,
              const std::string &out_dir) {
	SweepConfig cfg = parse_sweep_config(load_json_file(grid_path));
	if (seed_flag)
		cfg.master_seed = *seed_flag;

	fs::create_directories(out_dir);
	echo_config_file(fs::path(out_dir) / "config.json", echo_sweep_config(cfg));

	const SweepReport report = run_sweep(cfg);

	std::ofstream csv(fs::path(out_dir) / "trials.csv");
	write_trials_csv(report, csv);
	csv.close();
	write_text_file((fs::path(out_dir) / "aggregate.json").string(), aggregate_json(report));
	const std::string table = summary_table(report);
	write_text_file((fs::path(out_dir) / "summary.txt").string(), table);
	std::cout << table;

	size_t failed = 0;
	for (const auto &t : report.trials)
		failed += !t.ok;
	if (failed)
		std::cerr << failed << " trial(s) failed; see trials.csv status column\n";
	return kExitOk;
}

int cmd_nn_selftest() {
	const auto cases = run_gradient_suite(20, 0x5E1F7E57, 1e-4, 1e-5);
	bool all_pass = true;
	std::printf("%-28s %8s %14s  %s\n", "case", "configs", "max_rel_err", "result");
	for (const auto &c : cases) {
		std::printf("%-28s %8zu %14.3e  %s\n", c.name.c_str(), c.configs, c.max_rel_err,
		            c.pass ? "pass" : "FAIL");
		all_pass &= c.pass;
	}
	std::printf("%s\n", all_pass ? "all gradient checks passed" : "gradient checks FAILED");
	return all_pass ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"puffprint: PUF-fingerprinted knowledge distillation toolkit"};
	app.require_subcommand(1);

	// keygen
	auto *keygen = app.add_subcommand("keygen", "Generate a registry of device keys");
	size_t kg_bits = 10, kg_devices = 100;
	uint64_t kg_seed = 1;
	std::string kg_out = "registry.txt";
	keygen->add_option("--bits", kg_bits, "Key bit-length n")->required();
	keygen->add_option("--devices", kg_devices, "Number of devices R")->required();
	keygen->add_option("--seed", kg_seed, "RNG seed");
	keygen->add_option("--out", kg_out, "Output registry file");

	// train-decoder
	auto *traindec = app.add_subcommand("train-decoder", "Train the stage-1 bit decoder");
	std::string td_config, td_out = "decoder.bin";
	int td_jobs = 0;
	traindec->add_option("--config", td_config, "Synthetic dataset config (JSON)")->required();
	traindec->add_option("--out", td_out, "Output decoder checkpoint");
	traindec->add_option("--jobs", td_jobs, "Worker threads (default: all cores)");

	// distill
	auto *distill = app.add_subcommand("distill", "Run a fingerprinted distillation");
	std::string di_config, di_registry, di_leaker, di_out = "rundir";
	int di_jobs = 0;
	distill->add_option("--config", di_config, "Run config (JSON)")->required();
	distill->add_option("--registry", di_registry, "Registry file")->required();
	distill->add_option("--leaker", di_leaker, "Leaker device id")->required();
	distill->add_option("--out", di_out, "Output directory");
	distill->add_option("--jobs", di_jobs, "Worker threads (default: all cores)");

	// decode
	auto *decode = app.add_subcommand("decode", "Recover the device key from probe deltas");
	std::string de_decoder, de_registry, de_probes, de_truth;
	std::string de_variant = "compressed", de_agg = "mean";
	bool de_analytic = false;
	size_t de_m = 1;
	double de_eps = 0.05;
	decode->add_option("--decoder", de_decoder, "Decoder checkpoint (neural stage 1)");
	decode->add_flag("--analytic", de_analytic, "Use the analytic nearest-level stage 1");
	decode->add_option("--variant", de_variant, "Analytic scheme variant (one_bit|compressed)");
	decode->add_option("--bits-per-logit", de_m, "Analytic scheme m");
	decode->add_option("--epsilon", de_eps, "Analytic scheme epsilon");
	decode->add_option("--registry", de_registry, "Registry file")->required();
	decode->add_option("--probes", de_probes, "CSV of probe logit differences")->required();
	decode->add_option("--aggregation", de_agg, "Probe aggregation (mean|majority|mean_delta)");
	decode->add_option("--truth", de_truth, "Known leaker id, reports stage-1 Hamming error");

	// sweep
	auto *sweep = app.add_subcommand("sweep", "Multi-trial BER/FER/accuracy sweep");
	std::string sw_grid, sw_out = "results";
	int sw_jobs = 0;
	uint64_t sw_seed = 0;
	bool sw_seed_set = false;
	sweep->add_option("--grid", sw_grid, "Grid config (JSON)")->required();
	sweep->add_option("--seed", sw_seed, "Master seed (overrides the grid file)")
	    ->each([&](const std::string &) { sw_seed_set = true; });
	sweep->add_option("--out", sw_out, "Output directory");
	sweep->add_option("--jobs", sw_jobs, "Trial parallelism (default: all cores)");

	// nn selftest
	auto *nn = app.add_subcommand("nn", "Network engine utilities");
	nn->require_subcommand(1);
	auto *selftest = nn->add_subcommand("selftest", "Gradient checks against finite differences");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? kExitOk : kExitUsage;
	}

	try {
		if (*keygen)
			return cmd_keygen(kg_bits, kg_devices, kg_seed, kg_out);
		if (*traindec) {
			kernels::set_worker_threads(td_jobs);
			return cmd_train_decoder(td_config, td_out);
		}
		if (*distill) {
			kernels::set_worker_threads(di_jobs);
			return cmd_distill(di_config, di_registry, di_leaker, di_out);
		}
		if (*decode)
			return cmd_decode(de_decoder, de_analytic, de_variant, de_m, de_eps, de_registry,
			                  de_probes, de_agg, de_truth);
		if (*sweep) {
			kernels::set_worker_threads(sw_jobs);
			return cmd_sweep(sw_grid, sw_seed_set ? std::optional<uint64_t>(sw_seed) : std::nullopt,
			                 sw_out);
		}
		if (*selftest)
			return cmd_nn_selftest();
	} catch (const std::invalid_argument &ex) {
		std::cerr << "error: " << ex.what() << "\n";
		return kExitUsage;
	} catch (const std::exception &ex) {
		std::cerr << "error: " << ex.what() << "\n";
		return kExitRuntime;
	}
	return kExitUsage;
}
