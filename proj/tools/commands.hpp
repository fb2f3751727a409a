#pragma once

#include "hyperobs/hyperobs.hpp"
#include "hyperobs/io.hpp"

#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace hyperobs::cli {

enum ExitCode : int { Ok = 0, Failure = 1, DesignFailed = 2, Diverged = 3, BadConfig = 4 };

struct Options {
	std::filesystem::path config;
	std::filesystem::path design;
	std::filesystem::path out_dir = ".";
	std::filesystem::path out; ///< generate only
	std::optional<std::uint64_t> seed;
	std::size_t jobs = 1;
	std::size_t batch_index = 1;
};

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
	if (p.has_parent_path())
		std::filesystem::create_directories(p.parent_path());
	std::ofstream out(p, std::ios::binary);
	if (!out)
		throw Error(ErrorKind::ConfigError, "cannot write " + p.string());
	out << text;
}

inline Json read_json(const std::filesystem::path& p)
{
	std::ifstream in(p);
	if (!in)
		throw Error(ErrorKind::ConfigError, "cannot open " + p.string());
	try {
		return Json::parse(in);
	} catch (const Json::exception& e) {
		throw Error(ErrorKind::ConfigError, p.string() + " is not valid JSON: " + e.what());
	}
}

inline ExperimentConfig load(const Options& o)
{
	Json j = read_json(o.config);
	if (o.seed)
		j["seed"] = *o.seed;
	return parse_config(j, o.config.parent_path());
}

inline int cmd_generate(const Options& o)
{
	Json j = read_json(o.config);
	if (o.seed)
		j["seed"] = *o.seed;
	experiment_validator().validate(j, "/$defs/generator");
	const auto h = generate_hierarchical(gen_spec_from_json(j));
	const auto path = o.out.empty() ? o.out_dir / "hypergraph.json" : o.out;
	write_file(path, to_json(h).dump(2) + "\n");
	spdlog::info("wrote {} nodes, {} hyperedges to {}", h.num_nodes(), h.num_edges(), path.string());
	return Ok;
}

inline Json design_report(const ExperimentConfig& c, const DesignOutcome& out)
{
	Json r = to_json(out);
	r["config_hash"] = config_hash(c);
	r["seed"] = c.seed;
	r["original_ids"] = c.original_ids;
	return r;
}

inline int cmd_design(const Options& o)
{
	auto c = load(o);
	const auto sys = build_system(c);
	spdlog::info("design: {} nodes, {} hyperedges", sys.num_nodes(), sys.graph.num_edges());
	c.design.on_trace = [](const TraceEntry& e) {
		spdlog::info("iteration {}: {} subset of {} nodes{}", e.iteration, e.action, e.subset.size(), e.node ? fmt::format(", node {}", *e.node) : "");
	};
	const auto trajectories = generate_trajectories(sys, c.trajectories);
	const auto out = design_observer(sys, trajectories, c.design);
	write_file(o.out_dir / "design.json", design_report(c, out).dump(2) + "\n");
	if (!out.complete()) {
		spdlog::warn("design failed on subset of {} nodes", out.failed_subset.size());
		return DesignFailed;
	}
	spdlog::info("design complete, {} measured nodes", out.measured.size());
	return Ok;
}

inline DesignOutcome load_design(const Options& o, const ExperimentConfig& c)
{
	const Json d = read_json(o.design);
	if (d.value("config_hash", std::string()) != config_hash(c))
		throw Error(ErrorKind::ConfigError, "design file was produced from a different configuration");
	try {
		return outcome_from_json(d);
	} catch (const Json::exception& e) {
		throw Error(ErrorKind::ConfigError, std::string("malformed design file: ") + e.what());
	}
}

/// Runs the given batches; writes batch_<b>.csv per batch and summary.json.
inline int run_batches(const Options& o, const ExperimentConfig& c, const std::vector<std::size_t>& which)
{
	const auto sys = build_system(c);
	const auto outcome = load_design(o, c);
	const ObserverDesign design = outcome.design();
	std::optional<std::vector<StateSample>> samples;

	Json batches = Json::array();
	bool diverged = false;
	for (std::size_t b : which) {
		const SimConfig s = batch_sim_config(c, sys, b);
		spdlog::info("batch {}: {} runs", b, c.runs);
		const auto st = monte_carlo(sys, design, s, c.runs, o.jobs);
		write_file(o.out_dir / ("batch_" + std::to_string(b) + ".csv"), stats_csv(st, c.max_rows));

		const auto [mu_bar, nu_bar] = uncertainty_bounds(sys, s);
		double bound = 0.0;
		if ((mu_bar > 0.0 || nu_bar > 0.0) && outcome.complete()) {
			if (!samples)
				samples = flatten(generate_trajectories(sys, c.trajectories));
			bound = robustness_bounds(sys, outcome, *samples, mu_bar, nu_bar).total;
		}
		Json settle = Json::array();
		std::vector<double> settled;
		for (const auto& t : st.settling) {
			settle.push_back(t ? Json(*t) : Json(nullptr));
			if (t)
				settled.push_back(*t);
		}
		Json e{{"batch", b}, {"runs", st.runs()}, {"settled", st.settled_count()}, {"diverged", st.diverged_count()}, {"settling_times", settle},
			{"max_error", detail::num(st.max_error_overall())}, {"mu_bar", mu_bar}, {"nu_bar", nu_bar}, {"thm3_bound", detail::num(bound)}};
		e["median_settling"] = settled.empty() ? Json(nullptr) : Json(percentile(settled, 0.5));
		e["max_settling"] = settled.empty() ? Json(nullptr) : Json(*std::max_element(settled.begin(), settled.end()));
		if (c.batch) {
			e["variable"] = c.batch->variable;
			e["value"] = c.batch->values[b - 1];
		}
		batches.push_back(e);
		diverged = diverged || st.diverged_count() > 0;
	}
	Json summary{{"config_hash", config_hash(c)}, {"seed", c.seed}, {"design_status", outcome.complete() ? "complete" : "failed"}, {"batches", batches}};
	write_file(o.out_dir / "summary.json", summary.dump(2) + "\n");
	return diverged ? Diverged : Ok;
}

inline int cmd_simulate(const Options& o)
{
	const auto c = load(o);
	return run_batches(o, c, {o.batch_index});
}

inline int cmd_batch(const Options& o)
{
	const auto c = load(o);
	std::vector<std::size_t> all(c.batch_count());
	std::iota(all.begin(), all.end(), 1);
	return run_batches(o, c, all);
}

/// Maps HYPEROBS_LOG (trace, debug, info, warn, error, off) to a level.
inline void configure_logging()
{
	spdlog::set_level(spdlog::level::warn);
	if (const char* env = std::getenv("HYPEROBS_LOG"))
		spdlog::set_level(spdlog::level::from_str(env));
}

template <typename F>
int guarded(F&& f)
{
	try {
		return f();
	} catch (const Error& e) {
		spdlog::error("{}", e.what());
		return e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::LayerTooSmall ? BadConfig : Failure;
	} catch (const std::exception& e) {
		spdlog::error("{}", e.what());
		return Failure;
	}
}

} // namespace hyperobs::cli
