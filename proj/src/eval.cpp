#include "puffprint/eval.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace puffprint {

double ber(const PufKey &predicted, const PufKey &truth) {
	return static_cast<double>(hamming_distance(predicted, truth)) /
	       static_cast<double>(truth.size());
}

double fer(const std::vector<TrialReport> &reports, int stage) {
	if (reports.empty())
		throw std::invalid_argument("fer: empty report list");
	if (stage != 1 && stage != 2)
		throw std::invalid_argument("fer: stage must be 1 or 2");
	size_t errors = 0;
	for (const auto &r : reports)
		errors += stage == 1 ? r.frame_error_stage1 : r.frame_error_stage2;
	return static_cast<double>(errors) / static_cast<double>(reports.size());
}

void SweepConfig::validate() const {
	if (schemes.empty() || epsilons.empty() || p_flips.empty())
		throw std::invalid_argument("SweepConfig: schemes, epsilons and p_flips must be non-empty");
	if (trials == 0 || probes == 0 || devices == 0)
		throw std::invalid_argument("SweepConfig: trials, probes and devices must be positive");
	for (double e : epsilons)
		if (!(e > 0.0))
			throw std::invalid_argument("SweepConfig: epsilons must be positive");
	for (double p : p_flips)
		if (!(p >= 0.0 && p <= 1.0))
			throw std::invalid_argument("SweepConfig: p_flips must lie in [0, 1]");
	if (!(sigma >= 0.0))
		throw std::invalid_argument("SweepConfig: sigma must be non-negative");
	for (const auto &s : schemes) {
		if (s.n != s.d * s.bits_per_logit)
			throw std::invalid_argument("SweepConfig: scheme needs n = d * bits_per_logit");
		if (s.variant == SchemeVariant::OneBit && s.bits_per_logit != 1)
			throw std::invalid_argument("SweepConfig: OneBit scheme needs bits_per_logit = 1");
	}
	if (mode == SweepMode::DecoderOnly) {
		if (epsilon_train_set.empty())
			throw std::invalid_argument("SweepConfig: epsilon_train_set must be non-empty");
	} else {
		task.validate();
		for (const auto &s : schemes)
			if (s.d != task.classes)
				throw std::invalid_argument(
				    "SweepConfig: end-to-end schemes must match the task class count");
		if (probes > task.classes * task.samples_per_class)
			throw std::invalid_argument("SweepConfig: more probes than test rows");
	}
}

namespace {

// Shortest round-trip decimal form, identical on every run.
std::string fmt(double v) {
	if (std::isnan(v))
		return "";
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof buf, v);
	return std::string(buf, res.ptr);
}

const char *variant_name(SchemeVariant v) {
	return v == SchemeVariant::OneBit ? "one_bit" : "compressed";
}

const char *mode_name(SweepMode m) {
	return m == SweepMode::DecoderOnly ? "decoder_only" : "end_to_end";
}

// Shared per-scheme state built once before the trial loops.
struct SchemeContext {
	SweepSchemeSpec spec;
	KeyRegistry registry;
	std::vector<Network> decoders; // stage-1 members (empty for compressed)
	// end-to-end
	TaskData task;
	Network teacher;
};

SchemeContext prepare_scheme(const SweepConfig &cfg, size_t scheme_idx) {
	const SweepSchemeSpec &s = cfg.schemes[scheme_idx];
	SchemeContext ctx;
	ctx.spec = s;

	const uint64_t scheme_master = Rng::derive_seed(cfg.master_seed, (1ULL << 40) + scheme_idx);
	ctx.registry = generate_registry(s.n, cfg.devices, Rng::derive_seed(scheme_master, 0));

	// The compressed scheme recovers analytically; only one-bit runs train
	// neural stage-1 members, one per independent synthetic dataset draw.
	if (s.variant == SchemeVariant::OneBit) {
		for (size_t member = 0; member < std::max<size_t>(1, cfg.decoder_ensemble); ++member) {
			SynthConfig synth;
			synth.n = s.n;
			synth.d = s.d;
			synth.devices = cfg.devices;
			synth.samples_per_device = cfg.samples_per_device;
			synth.epsilon_set = cfg.epsilon_train_set;
			synth.sigma = cfg.sigma;
			synth.variant = s.variant;
			synth.bits_per_logit = s.bits_per_logit;
			synth.rng_seed = Rng::derive_seed(scheme_master, 1 + 2 * member);
			const SynthDataset ds = build_synthetic_dataset(synth, ctx.registry);
			TrainConfig tc = cfg.decoder_train;
			tc.rng_seed = Rng::derive_seed(scheme_master, 2 + 2 * member);
			DecoderTrainOutcome out = train_decoder(ds, tc, cfg.decoder_hidden);
			if (out.train.diverged)
				throw std::runtime_error("run_sweep: decoder training diverged");
			ctx.decoders.push_back(std::move(out.net));
		}
	}

	if (cfg.mode == SweepMode::EndToEnd) {
		ctx.task = make_task(cfg.task);
		TeacherResult teacher = train_teacher(ctx.task, cfg.teacher_hidden, cfg.teacher_train);
		if (teacher.train.diverged)
			throw std::runtime_error("run_sweep: teacher training diverged");
		ctx.teacher = std::move(teacher.net);
	}
	return ctx;
}

TrialReport run_decoder_only_trial(const SweepConfig &cfg, const SchemeContext &ctx,
                                   size_t leaker, TrialReport report) {
	Rng rng(report.seed);
	const PufKey &truth = ctx.registry.key(leaker);
	report.leaker_id = ctx.registry.id(leaker);

	const EncodingScheme scheme(ctx.spec.variant, report.epsilon, ctx.spec.bits_per_logit);
	const NoiseModel noise(report.p_flip, rng.next_u64());
	const std::vector<PufKey> noisy = apply_noise(truth, noise, cfg.probes);

	Tensor probes = Tensor::zeros(cfg.probes, ctx.spec.d);
	for (size_t r = 0; r < cfg.probes; ++r) {
		const PerturbationVector delta = encode(noisy[r], scheme);
		double *row = probes.row_ptr(r);
		for (size_t c = 0; c < ctx.spec.d; ++c)
			row[c] = delta[c] + (cfg.sigma > 0.0 ? rng.normal(0.0, cfg.sigma) : 0.0);
	}

	const RecoveryResult res =
	    !ctx.decoders.empty()
	        ? recover(ctx.decoders, probes, ctx.registry, &truth, cfg.aggregation)
	        : recover_analytic(scheme, probes, ctx.registry, &truth);

	report.recovered_id = res.device_id;
	report.bit_errors_stage1 = *res.stage1_hamming_to_truth;
	report.frame_error_stage1 = report.bit_errors_stage1 > 0;
	report.frame_error_stage2 = res.device_id != report.leaker_id;
	report.tie_flag = res.tie_flag;
	report.acc_s = std::numeric_limits<double>::quiet_NaN();
	report.acc_p = std::numeric_limits<double>::quiet_NaN();
	report.ok = true;
	return report;
}

TrialReport run_end_to_end_trial(const SweepConfig &cfg, const SchemeContext &ctx,
                                 size_t leaker, TrialReport report) {
	Rng rng(report.seed);
	const PufKey &truth = ctx.registry.key(leaker);
	report.leaker_id = ctx.registry.id(leaker);

	DistillRun run;
	run.scheme = EncodingScheme(ctx.spec.variant, report.epsilon, ctx.spec.bits_per_logit);
	run.leaker_key = truth;
	run.noise = NoiseModel(report.p_flip, rng.next_u64());
	run.temperature = cfg.kd_temperature;

	TrainConfig tc = cfg.student_train;
	tc.rng_seed = rng.next_u64();
	const DistillOutcome outcome =
	    distill_student(ctx.teacher, run, ctx.task, cfg.student_hidden, tc);
	if (outcome.diverged)
		throw std::runtime_error("student training diverged");

	Tensor probe_x = Tensor::zeros(cfg.probes, ctx.task.test_x.cols());
	for (size_t r = 0; r < cfg.probes; ++r)
		std::copy(ctx.task.test_x.row_ptr(r), ctx.task.test_x.row_ptr(r) + ctx.task.test_x.cols(),
		          probe_x.row_ptr(r));
	const Tensor deltas = probe_deltas(ctx.teacher, outcome.student, probe_x);

	const RecoveryResult res =
	    !ctx.decoders.empty()
	        ? recover(ctx.decoders, deltas, ctx.registry, &truth, cfg.aggregation)
	        : recover_analytic(run.scheme, deltas, ctx.registry, &truth);

	report.recovered_id = res.device_id;
	report.bit_errors_stage1 = *res.stage1_hamming_to_truth;
	report.frame_error_stage1 = report.bit_errors_stage1 > 0;
	report.frame_error_stage2 = res.device_id != report.leaker_id;
	report.tie_flag = res.tie_flag;
	report.acc_s = outcome.acc_s * 100.0;
	report.acc_p = outcome.acc_p * 100.0;
	report.ok = true;
	return report;
}

double sample_std(const std::vector<double> &xs, double mean) {
	if (xs.size() < 2)
		return 0.0;
	double acc = 0.0;
	for (double x : xs)
		acc += (x - mean) * (x - mean);
	return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

} // namespace

std::vector<GridPointStats> aggregate_trials(const SweepConfig &cfg,
                                             const std::vector<TrialReport> &trials) {
	std::vector<GridPointStats> stats;
	for (const auto &scheme : cfg.schemes) {
		for (double eps : cfg.epsilons) {
			for (double pf : cfg.p_flips) {
				GridPointStats g;
				g.scheme = scheme;
				g.epsilon = eps;
				g.p_flip = pf;
				std::vector<double> bers, accps;
				size_t fe1 = 0, fe2 = 0;
				double acc_s_sum = 0.0;
				for (const auto &t : trials) {
					if (t.scheme.variant != scheme.variant || t.scheme.n != scheme.n ||
					    t.scheme.bits_per_logit != scheme.bits_per_logit || t.epsilon != eps ||
					    t.p_flip != pf)
						continue;
					if (!t.ok) {
						++g.trials_failed;
						continue;
					}
					++g.trials_ok;
					bers.push_back(static_cast<double>(t.bit_errors_stage1) /
					               static_cast<double>(scheme.n));
					fe1 += t.frame_error_stage1;
					fe2 += t.frame_error_stage2;
					if (!std::isnan(t.acc_p)) {
						accps.push_back(t.acc_p);
						acc_s_sum += t.acc_s;
					}
				}
				if (g.trials_ok > 0) {
					for (double b : bers)
						g.mean_ber1 += b;
					g.mean_ber1 /= static_cast<double>(g.trials_ok);
					g.std_ber1 = sample_std(bers, g.mean_ber1);
					g.fer_stage1 = static_cast<double>(fe1) / static_cast<double>(g.trials_ok);
					g.fer_stage2 = static_cast<double>(fe2) / static_cast<double>(g.trials_ok);
				}
				if (!accps.empty()) {
					for (double a : accps)
						g.mean_acc_p += a;
					g.mean_acc_p /= static_cast<double>(accps.size());
					g.std_acc_p = sample_std(accps, g.mean_acc_p);
					g.mean_acc_s = acc_s_sum / static_cast<double>(accps.size());
				} else {
					g.mean_acc_p = g.std_acc_p = g.mean_acc_s =
					    std::numeric_limits<double>::quiet_NaN();
				}
				stats.push_back(std::move(g));
			}
		}
	}
	return stats;
}

SweepReport run_sweep(const SweepConfig &cfg) {
	cfg.validate();
	SweepReport report;
	report.config = cfg;

	const size_t grid_per_scheme = cfg.epsilons.size() * cfg.p_flips.size();
	report.trials.resize(cfg.schemes.size() * grid_per_scheme * cfg.trials);

	for (size_t si = 0; si < cfg.schemes.size(); ++si) {
		const SchemeContext ctx = prepare_scheme(cfg, si);
		for (size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
			for (size_t pi = 0; pi < cfg.p_flips.size(); ++pi) {
				const size_t grid_idx = (si * cfg.epsilons.size() + ei) * cfg.p_flips.size() + pi;
				const size_t base = grid_idx * cfg.trials;

				// leakers are distinct devices while trials last (a seeded
				// permutation); only surplus trials resample
				std::vector<size_t> leakers(cfg.trials);
				{
					std::vector<size_t> perm(cfg.devices);
					for (size_t i = 0; i < cfg.devices; ++i)
						perm[i] = i;
					Rng perm_rng = Rng::derive(cfg.master_seed, (uint64_t{2} << 50) + grid_idx);
					for (size_t i = cfg.devices - 1; i > 0; --i)
						std::swap(perm[i], perm[perm_rng.below(i + 1)]);
					for (size_t t = 0; t < cfg.trials; ++t)
						leakers[t] = t < cfg.devices ? perm[t]
						                             : perm_rng.below(cfg.devices);
				}
#pragma omp parallel for schedule(dynamic)
				for (long t = 0; t < static_cast<long>(cfg.trials); ++t) {
					TrialReport r;
					r.mode = cfg.mode;
					r.scheme = ctx.spec;
					r.epsilon = cfg.epsilons[ei];
					r.p_flip = cfg.p_flips[pi];
					r.sigma = cfg.sigma;
					r.trial_id = static_cast<size_t>(t);
					r.seed = Rng::derive_seed(cfg.master_seed,
					                          (static_cast<uint64_t>(grid_idx) << 32) +
					                              static_cast<uint64_t>(t));
					try {
						r = cfg.mode == SweepMode::DecoderOnly
						        ? run_decoder_only_trial(cfg, ctx, leakers[t], r)
						        : run_end_to_end_trial(cfg, ctx, leakers[t], r);
					} catch (const std::exception &ex) {
						r.ok = false;
						r.error = ex.what();
					}
					report.trials[base + static_cast<size_t>(t)] = std::move(r);
				}
				bool any_ok = false;
				for (size_t t = 0; t < cfg.trials; ++t)
					any_ok |= report.trials[base + t].ok;
				if (!any_ok)
					throw std::runtime_error(
					    "run_sweep: every trial failed at epsilon=" + fmt(cfg.epsilons[ei]) +
					    " p_flip=" + fmt(cfg.p_flips[pi]) + ": " + report.trials[base].error);
			}
		}
	}

	report.aggregates = aggregate_trials(cfg, report.trials);
	return report;
}

void write_trials_csv(const SweepReport &report, std::ostream &out) {
	out << "schema_version,mode,variant,n,d,m,epsilon,p_flip,sigma,trial,seed,status,"
	       "leaker_id,recovered_id,bit_errors_stage1,ber_stage1,frame_error_stage1,"
	       "frame_error_stage2,tie,acc_s,acc_p\n";
	for (const auto &t : report.trials) {
		out << 1 << ',' << mode_name(t.mode) << ',' << variant_name(t.scheme.variant) << ','
		    << t.scheme.n << ',' << t.scheme.d << ',' << t.scheme.bits_per_logit << ','
		    << fmt(t.epsilon) << ',' << fmt(t.p_flip) << ',' << fmt(t.sigma) << ',' << t.trial_id
		    << ',' << t.seed << ',' << (t.ok ? "ok" : "error") << ',';
		if (t.ok) {
			out << t.leaker_id << ',' << t.recovered_id << ',' << t.bit_errors_stage1 << ','
			    << fmt(static_cast<double>(t.bit_errors_stage1) / static_cast<double>(t.scheme.n))
			    << ',' << (t.frame_error_stage1 ? 1 : 0) << ',' << (t.frame_error_stage2 ? 1 : 0)
			    << ',' << (t.tie_flag ? 1 : 0) << ',' << fmt(t.acc_s) << ',' << fmt(t.acc_p);
		} else {
			out << ",,,,,,,,";
		}
		out << '\n';
	}
}

std::string aggregate_json(const SweepReport &report) {
	nlohmann::ordered_json root;
	root["schema_version"] = 1;
	root["mode"] = mode_name(report.config.mode);
	root["master_seed"] = report.config.master_seed;
	root["sigma"] = report.config.sigma;
	root["devices"] = report.config.devices;
	root["trials_per_point"] = report.config.trials;
	root["probes"] = report.config.probes;
	root["reduced_trial_profile"] = report.config.trials < 100;

	nlohmann::ordered_json points = nlohmann::ordered_json::array();
	for (const auto &g : report.aggregates) {
		nlohmann::ordered_json p;
		p["variant"] = variant_name(g.scheme.variant);
		p["n"] = g.scheme.n;
		p["d"] = g.scheme.d;
		p["m"] = g.scheme.bits_per_logit;
		p["epsilon"] = g.epsilon;
		p["p_flip"] = g.p_flip;
		p["trials_ok"] = g.trials_ok;
		p["trials_failed"] = g.trials_failed;
		p["ber_stage1_mean"] = g.mean_ber1;
		p["ber_stage1_std"] = g.std_ber1;
		p["fer_stage1"] = g.fer_stage1;
		p["fer_stage2"] = g.fer_stage2;
		if (!std::isnan(g.mean_acc_p)) {
			p["acc_p_mean"] = g.mean_acc_p;
			p["acc_p_std"] = g.std_acc_p;
			p["acc_s_mean"] = g.mean_acc_s;
		}
		points.push_back(std::move(p));
	}
	root["grid"] = std::move(points);
	return root.dump(2) + "\n";
}

std::string summary_table(const SweepReport &report) {
	std::ostringstream out;
	char line[256];
	out << "variant     n   m  epsilon  p_flip  Acc_p(mean+-std)   BER1(%)  FER1(%)  FER2(%)  trials\n";
	for (const auto &g : report.aggregates) {
		std::string acc = "      -      ";
		if (!std::isnan(g.mean_acc_p)) {
			std::snprintf(line, sizeof line, "%6.2f +- %5.2f", g.mean_acc_p, g.std_acc_p);
			acc = line;
		}
		std::snprintf(line, sizeof line, "%-10s %3zu %3zu  %-7g  %-6g  %-16s  %7.2f  %7.2f  %7.2f  %4zu\n",
		              variant_name(g.scheme.variant), g.scheme.n, g.scheme.bits_per_logit,
		              g.epsilon, g.p_flip, acc.c_str(), 100.0 * g.mean_ber1, 100.0 * g.fer_stage1,
		              100.0 * g.fer_stage2, g.trials_ok);
		out << line;
	}
	if (report.config.trials < 100)
		out << "note: reduced-trial profile (" << report.config.trials
		    << " trials per point); tolerances widen accordingly\n";
	return out.str();
}

} // namespace puffprint
