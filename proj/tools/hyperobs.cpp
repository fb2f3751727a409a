#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
	using namespace hyperobs::cli;
	configure_logging();

	CLI::App app{"Observer design and validation for networks coupled through directed hypergraphs"};
	app.require_subcommand(1);
	Options o;
	std::uint64_t seed = 0;

	auto common = [&](CLI::App* sub) {
		sub->add_option("--config", o.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
		sub->add_option("--out-dir", o.out_dir, "output directory");
		sub->add_option("--seed", seed, "override the configuration seed");
		sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
	};

	auto* gen = app.add_subcommand("generate", "generate a hierarchical hypergraph from a generator spec");
	common(gen);
	gen->add_option("--out", o.out, "output file (default <out-dir>/hypergraph.json)");

	auto* des = app.add_subcommand("design", "run the observer design and write design.json");
	common(des);

	auto* sim = app.add_subcommand("simulate", "Monte-Carlo validation of one batch");
	common(sim);
	sim->add_option("--design", o.design, "design report")->required()->check(CLI::ExistingFile);
	sim->add_option("--batch-index", o.batch_index, "1-based batch index")->check(CLI::PositiveNumber);

	auto* bat = app.add_subcommand("batch", "Monte-Carlo validation of every batch");
	common(bat);
	bat->add_option("--design", o.design, "design report")->required()->check(CLI::ExistingFile);

	auto* sch = app.add_subcommand("schema", "print the experiment configuration schema");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		const int rc = app.exit(e);
		return rc == 0 ? 0 : BadConfig;
	}
	for (auto* s : {gen, des, sim, bat})
		if (s->parsed() && s->count("--seed"))
			o.seed = seed;

	if (sch->parsed()) {
		std::cout << hyperobs::experiment_schema_text() << "\n";
		return Ok;
	}
	if (gen->parsed())
		return guarded([&] { return cmd_generate(o); });
	if (des->parsed())
		return guarded([&] { return cmd_design(o); });
	if (sim->parsed())
		return guarded([&] { return cmd_simulate(o); });
	return guarded([&] { return cmd_batch(o); });
}
