#include "oracles.hpp"

#include "hyperobs/io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace hyperobs;

namespace {

const std::filesystem::path source_dir = HYPEROBS_SOURCE_DIR;

Json minimal_config()
{
	return Json::parse(R"({
  "seed": 5,
  "hypergraph": {"inline": {"num_nodes": 3, "edges": [{"tails": [0], "heads": [1, 2], "sigma": 2}]}},
  "dynamics": {
    "vector_field": {"field": "bistable"},
    "coupling": {"coupling": "tanh", "params": [0.2, 0.05, 2]},
    "output": {"matrix": [[1]]}
  }
})");
}

ErrorKind parse_kind(const Json& j)
{
	try {
		parse_config(j);
	} catch (const Error& e) {
		return e.kind();
	}
	return ErrorKind::Infeasible;
}

} // namespace

TEST(Json, HypergraphRoundTrip)
{
	Rng rng(1);
	for (int t = 0; t < 10; ++t) {
		const auto h = oracle::random_hypergraph(rng, 8, 6, 3);
		EXPECT_EQ(hypergraph_from_json(Json::parse(to_json(h).dump())), h);
	}
}

TEST(Json, DefaultsForMissingWeights)
{
	const auto h = hypergraph_from_json(Json::parse(R"({"num_nodes": 3, "edges": [{"tails": [0, 1], "heads": [2]}]})"));
	EXPECT_EQ(h.edge(0).alpha, (std::vector<double>{0.5, 0.5}));
	EXPECT_EQ(h.edge(0).sigma, 1.0);
}

TEST(Json, MatrixAndGainsRoundTrip)
{
	Mat m(2, 3);
	m << 1, 2, 3, 4, 5, 6.5;
	EXPECT_EQ(matrix_from_json(to_json(m)), m);
	GainSet g;
	g[{3, 1}] = m;
	g[{0, 0}] = Mat::Identity(2, 2);
	const auto back = gains_from_json(Json::parse(to_json(g).dump()));
	ASSERT_EQ(back.size(), 2u);
	EXPECT_EQ(back.at({3, 1}), m);
	EXPECT_THROW(matrix_from_json(Json::parse("[[1, 2], [3]]")), Error);
	EXPECT_THROW(gains_from_json(Json::parse(R"({"12": [[1]]})")), Error);
}

TEST(Json, DesignOutcomeRoundTripIsExact)
{
	DesignOutcome o;
	o.status = DesignOutcome::Status::Complete;
	o.measured = {1, 4};
	o.gains[{1, 1}] = Mat::Constant(1, 1, 0.1 + 0.2);
	SubsetRecord r;
	r.nodes = {1, 2};
	r.added = {1};
	r.iteration = 2;
	r.report.theorem_used = Theorem::SymmetricPart;
	r.report.passed = true;
	r.report.worst_value = -1.0 / 3.0;
	r.report.h2_margin = std::numeric_limits<double>::quiet_NaN();
	r.report.trajectory_ids = {0, 7};
	o.subsets.push_back(r);
	o.trace.push_back({2, "measure", {1, 2}, NodeId(1)});
	o.network_rate = 12.5;
	const auto j = to_json(o);
	const auto back = outcome_from_json(Json::parse(j.dump()));
	EXPECT_EQ(to_json(back).dump(), j.dump());
	EXPECT_EQ(back.gains.at({1, 1})(0, 0), 0.1 + 0.2);
	EXPECT_TRUE(std::isnan(back.subsets[0].report.h2_margin));
	EXPECT_EQ(back.subsets[0].report.theorem_used, Theorem::SymmetricPart);
}

TEST(Schema, FileMatchesEmbeddedText)
{
	std::ifstream in(source_dir / "schemas" / "experiment.schema.json");
	ASSERT_TRUE(in);
	EXPECT_EQ(Json::parse(in), Json::parse(experiment_schema_text()));
}

TEST(Schema, RejectsUnknownAndMalformed)
{
	EXPECT_TRUE(experiment_validator().errors(minimal_config()).empty());
	Json j = minimal_config();
	j["extra"] = 1;
	EXPECT_EQ(parse_kind(j), ErrorKind::ConfigError);
	j = minimal_config();
	j["dynamics"]["coupling"]["params"] = {1, 2};
	EXPECT_EQ(parse_kind(j), ErrorKind::ConfigError);
	j = minimal_config();
	j["hypergraph"]["file"] = "x.json";
	EXPECT_EQ(parse_kind(j), ErrorKind::ConfigError);
	j = minimal_config();
	j["design"] = {{"margin", -1}};
	EXPECT_EQ(parse_kind(j), ErrorKind::ConfigError);
	j = minimal_config();
	j.erase("dynamics");
	const auto errs = experiment_validator().errors(j);
	ASSERT_EQ(errs.size(), 1u);
	EXPECT_NE(errs[0].find("dynamics"), std::string::npos);
}

TEST(Config, DefaultsAndSeeds)
{
	const auto c = parse_config(minimal_config());
	EXPECT_EQ(c.graph.num_nodes(), 3u);
	EXPECT_EQ(c.design.margin, 1.0);
	EXPECT_EQ(c.runs, 100u);
	EXPECT_EQ(c.trajectories.seed, derive_seed(5, 1));
	EXPECT_EQ(c.design.seed, derive_seed(5, 2));
	EXPECT_EQ(c.sim.seed, derive_seed(5, 3));
	EXPECT_EQ(c.batch_count(), 1u);
	const auto sys = build_system(c);
	EXPECT_EQ(sys.n(), 1u);
	EXPECT_EQ(batch_sim_config(c, sys, 1).seed, derive_seed(c.sim.seed, 1));
	EXPECT_THROW(batch_sim_config(c, sys, 2), Error);
}

TEST(Config, HashTracksDesignInputsOnly)
{
	const auto a = parse_config(minimal_config());
	Json j = minimal_config();
	j["sim"] = {{"runs", 7}};
	EXPECT_EQ(config_hash(parse_config(j)), config_hash(a));
	j["design"] = {{"margin", 2}};
	EXPECT_NE(config_hash(parse_config(j)), config_hash(a));
	j = minimal_config();
	j["seed"] = 6;
	EXPECT_NE(config_hash(parse_config(j)), config_hash(a));
}

TEST(Config, OutputDimensionChecked)
{
	Json j = minimal_config();
	j["dynamics"]["output"]["matrix"] = {{1, 0}};
	try {
		build_system(parse_config(j));
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
	}
}

TEST(Config, ShippedExperimentsParse)
{
	for (const auto& entry : std::filesystem::directory_iterator(source_dir / "experiments")) {
		if (entry.path().extension() != ".json")
			continue;
		SCOPED_TRACE(entry.path().filename().string());
		const auto c = load_config(entry.path());
		const auto sys = build_system(c);
		EXPECT_GT(sys.num_nodes(), 0u);
		for (std::size_t b = 1; b <= c.batch_count(); ++b)
			EXPECT_NO_THROW(batch_sim_config(c, sys, b));
	}
}

TEST(Config, BatchValuesApplyScale)
{
	const auto c = load_config(source_dir / "experiments" / "lorenz20_params.json");
	ASSERT_TRUE(c.batch);
	const auto sys = build_system(c);
	const auto s = batch_sim_config(c, sys, 2);
	ASSERT_EQ(s.param_spread.size(), 3u);
	EXPECT_DOUBLE_EQ(s.param_spread[0], c.batch->scale * c.batch->values[1]);
	const auto [mu, nu] = uncertainty_bounds(sys, s);
	EXPECT_DOUBLE_EQ(mu, s.param_spread[0] * sys.nominal().norm());
	EXPECT_EQ(nu, 0.0);
}

TEST(Config, LargestComponentKeepsOriginalIds)
{
	Json j = minimal_config();
	j["hypergraph"] = {{"inline", {{"num_nodes", 5}, {"edges", Json::parse(R"([{"tails": [0], "heads": [2]}, {"tails": [2], "heads": [4]}, {"tails": [1], "heads": [3]}])")}}},
		{"largest_component", true}};
	j["design"] = {{"allowed_measurements", {4, 1}}};
	const auto c = parse_config(j);
	EXPECT_EQ(c.original_ids, (NodeList{0, 2, 4}));
	EXPECT_EQ(c.graph.num_nodes(), 3u);
	ASSERT_TRUE(c.design.allowed_measurements);
	EXPECT_EQ(*c.design.allowed_measurements, NodeList{2});
}

TEST(Csv, HeaderRowsAndPrecision)
{
	EnsembleStats st;
	for (int k = 0; k < 10; ++k) {
		st.times.push_back(0.1 * k);
		st.median.push_back(1.0 / 3.0);
		st.p25.push_back(0.0);
		st.p75.push_back(1.0);
	}
	const std::string csv = stats_csv(st, 4);
	std::istringstream in(csv);
	std::string line;
	std::getline(in, line);
	EXPECT_EQ(line, "t,median,p25,p75");
	std::size_t rows = 0;
	double last = -1;
	while (std::getline(in, line)) {
		++rows;
		std::istringstream ls(line);
		std::string f;
		std::getline(ls, f, ',');
		last = std::stod(f);
		std::getline(ls, f, ',');
		EXPECT_EQ(std::stod(f), 1.0 / 3.0);
	}
	EXPECT_LE(rows, 4u);
	EXPECT_GE(rows, 2u);
	EXPECT_DOUBLE_EQ(last, 0.9);
}
