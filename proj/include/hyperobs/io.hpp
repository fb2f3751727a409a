#pragma once

#include "hyperobs/designer.hpp"
#include "hyperobs/generator.hpp"
#include "hyperobs/schema.hpp"
#include "hyperobs/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace hyperobs {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Hypergraph and generator spec

inline Json to_json(const Hyperedge& e)
{
	return Json{{"tails", e.tails}, {"heads", e.heads}, {"alpha", e.alpha}, {"beta", e.beta}, {"sigma", e.sigma}};
}

inline Json to_json(const DirectedHypergraph& h)
{
	Json edges = Json::array();
	for (const auto& e : h.edges())
		edges.push_back(to_json(e));
	return Json{{"num_nodes", h.num_nodes()}, {"edges", edges}};
}

/// Missing alpha/beta default to uniform weights, missing sigma to 1.
inline DirectedHypergraph hypergraph_from_json(const Json& j)
{
	DirectedHypergraph h(j.at("num_nodes").get<std::size_t>());
	for (const auto& je : j.at("edges")) {
		Hyperedge e = Hyperedge::uniform(je.at("tails").get<NodeList>(), je.at("heads").get<NodeList>(), je.value("sigma", 1.0));
		if (je.contains("alpha"))
			e.alpha = je["alpha"].get<std::vector<double>>();
		if (je.contains("beta"))
			e.beta = je["beta"].get<std::vector<double>>();
		h.add_hyperedge(std::move(e));
	}
	return h;
}

inline Json to_json(const HierarchicalGenSpec& s)
{
	return Json{{"layer_sizes", s.layer_sizes}, {"cardinality", s.cardinality}, {"src_intra", s.src_intra}, {"snk_intra", s.snk_intra},
		{"src_inter", s.src_inter}, {"snk_inter", s.snk_inter}, {"seed", s.seed}, {"sigma", s.sigma}};
}

inline HierarchicalGenSpec gen_spec_from_json(const Json& j)
{
	HierarchicalGenSpec s;
	s.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
	s.cardinality = j.at("cardinality").get<std::size_t>();
	s.src_intra = j.at("src_intra").get<std::vector<std::size_t>>();
	s.snk_intra = j.at("snk_intra").get<std::vector<std::size_t>>();
	s.src_inter = j.at("src_inter").get<std::vector<std::size_t>>();
	s.snk_inter = j.at("snk_inter").get<std::vector<std::size_t>>();
	s.seed = j.at("seed").get<std::uint64_t>();
	s.sigma = j.value("sigma", 1.0);
	return s;
}

// ---------------------------------------------------------------------------
// Matrices, gains, reports, design outcome

inline Json to_json(const Mat& m)
{
	Json rows = Json::array();
	for (Eigen::Index r = 0; r < m.rows(); ++r) {
		Json row = Json::array();
		for (Eigen::Index c = 0; c < m.cols(); ++c)
			row.push_back(m(r, c));
		rows.push_back(row);
	}
	return rows;
}

inline Mat matrix_from_json(const Json& j)
{
	const auto rows = static_cast<Eigen::Index>(j.size());
	const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
	Mat m(rows, cols);
	for (Eigen::Index r = 0; r < rows; ++r) {
		if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
			throw Error(ErrorKind::DimensionMismatch, "ragged matrix");
		for (Eigen::Index c = 0; c < cols; ++c)
			m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
	}
	return m;
}

/// {"i,j": row-major matrix}
inline Json to_json(const GainSet& g)
{
	Json j = Json::object();
	for (const auto& [key, L] : g)
		j[std::to_string(key.first) + "," + std::to_string(key.second)] = to_json(L);
	return j;
}

inline GainSet gains_from_json(const Json& j)
{
	GainSet g;
	for (auto it = j.begin(); it != j.end(); ++it) {
		const auto comma = it.key().find(',');
		if (comma == std::string::npos)
			throw Error(ErrorKind::ConfigError, "gain key must be \"i,j\"");
		g[{std::stoull(it.key().substr(0, comma)), std::stoull(it.key().substr(comma + 1))}] = matrix_from_json(it.value());
	}
	return g;
}

namespace detail {

inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }
inline double num(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

} // namespace detail

inline Json to_json(const CertificationReport& r)
{
	return Json{{"theorem", to_string(r.theorem_used)}, {"passed", r.passed}, {"required_margin", detail::num(r.required_margin)},
		{"worst_value", detail::num(r.worst_value)}, {"h2_margin", detail::num(r.h2_margin)},
		{"max_coupling_jacobian", detail::num(r.max_coupling_jacobian)}, {"sample_count", r.sample_count}, {"trajectory_ids", r.trajectory_ids},
		{"note", r.note}};
}

inline CertificationReport report_from_json(const Json& j)
{
	CertificationReport r;
	const std::string t = j.at("theorem");
	r.theorem_used = t == "thm1" ? Theorem::SlowlyVarying : t == "thm2" ? Theorem::SymmetricPart : Theorem::None;
	r.passed = j.at("passed");
	r.required_margin = detail::num(j.at("required_margin"));
	r.worst_value = detail::num(j.at("worst_value"));
	r.h2_margin = detail::num(j.at("h2_margin"));
	r.max_coupling_jacobian = detail::num(j.at("max_coupling_jacobian"));
	r.sample_count = j.at("sample_count");
	r.trajectory_ids = j.at("trajectory_ids").get<std::vector<std::size_t>>();
	r.note = j.value("note", "");
	return r;
}

inline Json to_json(const DesignOutcome& o)
{
	Json subsets = Json::array();
	for (const auto& s : o.subsets)
		subsets.push_back(
			Json{{"nodes", s.nodes}, {"report", to_json(s.report)}, {"added", s.added}, {"iteration", s.iteration}, {"shortcut", s.shortcut}});
	Json trace = Json::array();
	for (const auto& t : o.trace) {
		Json e{{"iteration", t.iteration}, {"action", t.action}, {"subset", t.subset}};
		e["node"] = t.node ? Json(*t.node) : Json(nullptr);
		trace.push_back(e);
	}
	return Json{{"status", o.complete() ? "complete" : "failed"}, {"measured", o.measured}, {"gains", to_json(o.gains)}, {"subsets", subsets},
		{"failed_subset", o.failed_subset}, {"trace", trace}, {"network_rate", o.network_rate}};
}

inline DesignOutcome outcome_from_json(const Json& j)
{
	DesignOutcome o;
	o.status = j.at("status") == "complete" ? DesignOutcome::Status::Complete : DesignOutcome::Status::Failed;
	o.measured = j.at("measured").get<NodeList>();
	o.gains = gains_from_json(j.at("gains"));
	for (const auto& s : j.at("subsets")) {
		SubsetRecord r;
		r.nodes = s.at("nodes").get<NodeList>();
		r.report = report_from_json(s.at("report"));
		r.added = s.at("added").get<NodeList>();
		r.iteration = s.at("iteration");
		r.shortcut = s.at("shortcut");
		o.subsets.push_back(std::move(r));
	}
	o.failed_subset = j.at("failed_subset").get<NodeList>();
	for (const auto& t : j.at("trace")) {
		TraceEntry e;
		e.iteration = t.at("iteration");
		e.action = t.at("action");
		e.subset = t.at("subset").get<NodeList>();
		if (!t.at("node").is_null())
			e.node = t.at("node").get<NodeId>();
		o.trace.push_back(std::move(e));
	}
	o.network_rate = j.at("network_rate");
	return o;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct BatchSpec {
	std::string variable; ///< "ic_spread", "noise" or "param_spread"
	std::vector<double> values;
	double scale = 1.0;
};

struct ExperimentConfig {
	Json raw;
	std::string name;
	std::uint64_t seed = 0;
	DirectedHypergraph graph;
	NodeList original_ids; ///< original id of each node (identity unless reduced to the largest component)
	Json graph_json;       ///< resolved hypergraph, after any reduction
	std::string field = "lorenz";
	Vec field_params;
	std::vector<double> coupling;
	Mat output;
	InitialBox box;
	DesignOptions design;
	TrajectoryEnsembleSpec trajectories;
	SimConfig sim;
	std::size_t runs = 100;
	std::size_t max_rows = 2000;
	std::optional<BatchSpec> batch;

	std::size_t batch_count() const { return batch ? batch->values.size() : 1; }
};

inline std::uint64_t fnv1a64(const std::string& s)
{
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : s) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

inline std::string hex64(std::uint64_t v)
{
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
	return buf;
}

namespace detail {

inline InitialBox box_from_json(const Json& j)
{
	InitialBox b;
	const auto lo = j.at("lo").get<std::vector<double>>(), hi = j.at("hi").get<std::vector<double>>();
	if (lo.size() != hi.size())
		throw Error(ErrorKind::ConfigError, "box lo and hi lengths differ");
	b.lo = Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size()));
	b.hi = Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()));
	b.transient = j.value("transient", 0.0);
	return b;
}

} // namespace detail

/// Validates against the experiment schema and resolves defaults. Relative
/// hypergraph file paths are taken relative to `base_dir`.
inline ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {})
{
	experiment_validator().validate(j);
	ExperimentConfig c;
	c.raw = j;
	c.name = j.value("name", "");
	c.seed = j.value("seed", std::uint64_t(0));

	try {
		const Json& hg = j.at("hypergraph");
		DirectedHypergraph g;
		if (hg.contains("inline")) {
			g = hypergraph_from_json(hg["inline"]);
		} else if (hg.contains("file")) {
			std::filesystem::path p = hg["file"].get<std::string>();
			if (p.is_relative())
				p = base_dir / p;
			std::ifstream in(p);
			if (!in)
				throw Error(ErrorKind::ConfigError, "cannot open hypergraph file " + p.string());
			g = hypergraph_from_json(Json::parse(in));
		} else {
			g = generate_hierarchical(gen_spec_from_json(hg["generator"]));
		}
		if (hg.value("largest_component", false)) {
			const auto lcc = largest_connected_component(g);
			auto ind = induced_subhypergraph(g, lcc.nodes);
			c.graph = std::move(ind.graph);
			c.original_ids = std::move(ind.original_ids);
		} else {
			c.graph = std::move(g);
			c.original_ids.resize(c.graph.num_nodes());
			std::iota(c.original_ids.begin(), c.original_ids.end(), 0);
		}
		c.graph_json = to_json(c.graph);
	} catch (const Error& e) {
		if (e.kind() == ErrorKind::ConfigError)
			throw;
		throw Error(ErrorKind::ConfigError, std::string("invalid hypergraph: ") + e.what());
	} catch (const Json::exception& e) {
		throw Error(ErrorKind::ConfigError, std::string("invalid hypergraph: ") + e.what());
	}

	const Json& dyn = j.at("dynamics");
	c.field = dyn.at("vector_field").at("field");
	if (dyn["vector_field"].contains("params")) {
		const auto p = dyn["vector_field"]["params"].get<std::vector<double>>();
		c.field_params = Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
	}
	c.coupling = dyn.at("coupling").at("params").get<std::vector<double>>();
	c.output = matrix_from_json(dyn.at("output").at("matrix"));

	const std::size_t n = c.field == "lorenz" ? 3 : 1;
	if (j.contains("initial_box")) {
		c.box = detail::box_from_json(j["initial_box"]);
	} else {
		c.box.lo = Vec::Constant(static_cast<Eigen::Index>(n), -1.0);
		c.box.hi = Vec::Constant(static_cast<Eigen::Index>(n), 1.0);
	}

	const Json d = j.value("design", Json::object());
	c.design.margin = d.value("margin", 1.0);
	c.design.rho = d.value("rho", 10.0);
	c.design.gain.max_iters = d.value("max_iters", std::size_t(5000));
	c.design.gain.restarts = d.value("restarts", std::size_t(3));
	c.design.gain.working_set = d.value("working_set", std::size_t(64));
	c.design.thm1.epsilon = d.value("epsilon", 0.1);
	c.design.thm1.kronecker_cap = d.value("kronecker_cap", std::size_t(40));
	c.design.use_thm1 = d.value("use_theorem1", true);
	c.design.invertible_shortcut = d.value("invertible_shortcut", true);
	if (d.contains("shortcut_margin"))
		c.design.shortcut_margin = d["shortcut_margin"].get<double>();
	if (d.contains("allowed_measurements")) {
		NodeList allowed;
		// ids refer to the original numbering; map through any reduction
		for (NodeId v : d["allowed_measurements"].get<NodeList>()) {
			auto it = std::find(c.original_ids.begin(), c.original_ids.end(), v);
			if (it != c.original_ids.end())
				allowed.push_back(static_cast<NodeId>(it - c.original_ids.begin()));
		}
		c.design.allowed_measurements = allowed;
	}
	c.design.sample_stride = d.value("sample_stride", std::size_t(1));
	c.design.seed = derive_seed(c.seed, 2);
	const Json t = d.value("trajectories", Json::object());
	c.trajectories.count = t.value("count", std::size_t(100));
	c.trajectories.horizon = t.value("horizon", 2.0);
	c.trajectories.dt = t.value("dt", 1e-3);
	c.trajectories.stride = t.value("stride", std::size_t(5));
	c.trajectories.box = t.contains("box") ? detail::box_from_json(t["box"]) : c.box;
	c.trajectories.seed = derive_seed(c.seed, 1);

	const Json s = j.value("sim", Json::object());
	c.sim.dt = s.value("dt", 1e-3);
	c.sim.horizon = s.value("horizon", 2.0);
	c.sim.ic_spread = s.value("ic_spread", 0.2);
	c.sim.noise = s.value("noise", 0.0);
	c.sim.param_spread = s.value("param_spread", std::vector<double>{});
	c.sim.record_stride = s.value("record_stride", std::size_t(1));
	c.sim.box = s.contains("box") ? detail::box_from_json(s["box"]) : c.box;
	c.sim.seed = derive_seed(c.seed, 3);
	c.runs = s.value("runs", std::size_t(100));
	c.max_rows = s.value("max_rows", std::size_t(2000));

	if (j.contains("batch")) {
		BatchSpec b;
		b.variable = j["batch"]["variable"];
		b.values = j["batch"]["values"].get<std::vector<double>>();
		b.scale = j["batch"].value("scale", 1.0);
		c.batch = b;
	}
	return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
	std::ifstream in(path);
	if (!in)
		throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
	Json j;
	try {
		j = Json::parse(in);
	} catch (const Json::exception& e) {
		throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
	}
	return parse_config(j, path.parent_path());
}

/// Hash of everything a design depends on: resolved hypergraph, dynamics,
/// design options, initial box and seed.
inline std::string config_hash(const ExperimentConfig& c)
{
	Json k{{"hypergraph", c.graph_json}, {"dynamics", c.raw.at("dynamics")}, {"design", c.raw.value("design", Json::object())},
		{"initial_box", c.raw.value("initial_box", Json(nullptr))}, {"seed", c.seed}};
	return hex64(fnv1a64(k.dump()));
}

inline NetworkSystem build_system(const ExperimentConfig& c)
{
	std::shared_ptr<const VectorField> f;
	if (c.field == "lorenz") {
		if (c.field_params.size() == 0)
			f = builtin_lorenz();
		else if (c.field_params.size() == 3)
			f = builtin_lorenz(c.field_params[0], c.field_params[1], c.field_params[2]);
		else
			throw Error(ErrorKind::ConfigError, "lorenz takes 3 parameters");
	} else {
		if (c.field_params.size() == 0)
			f = builtin_bistable();
		else if (c.field_params.size() == 2)
			f = builtin_bistable(c.field_params[0], c.field_params[1]);
		else
			throw Error(ErrorKind::ConfigError, "bistable takes 2 parameters");
	}
	const std::size_t n = f->state_dim();
	if (static_cast<std::size_t>(c.output.cols()) != n || c.output.rows() > c.output.cols())
		throw Error(ErrorKind::ConfigError, "output matrix must be p x n with p <= n");
	if (static_cast<std::size_t>(c.box.lo.size()) != n)
		throw Error(ErrorKind::ConfigError, "initial box dimension differs from the state dimension");
	try {
		return NetworkSystem(c.graph, f, builtin_tanh_coupling(c.coupling[0], c.coupling[1], c.coupling[2], n), std::make_shared<LinearOutput>(c.output));
	} catch (const Error& e) {
		throw Error(ErrorKind::ConfigError, e.what());
	}
}

/// Simulation settings for batch value `b` (the base settings without a batch section).
inline SimConfig batch_sim_config(const ExperimentConfig& c, const NetworkSystem& sys, std::size_t batch_index)
{
	SimConfig s = c.sim;
	s.seed = derive_seed(c.sim.seed, batch_index);
	if (c.batch) {
		if (batch_index < 1 || batch_index > c.batch->values.size())
			throw Error(ErrorKind::ConfigError, "batch index out of range");
		const double v = c.batch->scale * c.batch->values[batch_index - 1];
		if (c.batch->variable == "ic_spread")
			s.ic_spread = v;
		else if (c.batch->variable == "noise")
			s.noise = v;
		else
			s.param_spread.assign(static_cast<std::size_t>(sys.nominal().size()), v);
	} else if (batch_index != 1) {
		throw Error(ErrorKind::ConfigError, "no batch section; only batch index 1 exists");
	}
	return s;
}

/// (mu_bar, nu_bar) implied by a simulation setting.
inline std::pair<double, double> uncertainty_bounds(const NetworkSystem& sys, const SimConfig& s)
{
	double mu = 0.0;
	for (std::size_t k = 0; k < s.param_spread.size(); ++k) {
		const double d = sys.nominal()[static_cast<Eigen::Index>(k)] * s.param_spread[k];
		mu += d * d;
	}
	return {std::sqrt(mu), s.noise * std::sqrt(double(sys.p()))};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string fmt17(double x)
{
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", x);
	return buf;
}

/// t, median, p25, p75 with at most max_rows data rows (evenly strided).
inline std::string stats_csv(const EnsembleStats& st, std::size_t max_rows = 2000)
{
	std::ostringstream os;
	os << "t,median,p25,p75\n";
	const std::size_t len = st.times.size();
	const std::size_t stride = len == 0 ? 1 : (len + max_rows - 1) / max_rows;
	for (std::size_t k = 0; k < len; k += std::max<std::size_t>(stride, 1))
		os << fmt17(st.times[k]) << ',' << fmt17(st.median[k]) << ',' << fmt17(st.p25[k]) << ',' << fmt17(st.p75[k]) << '\n';
	return os.str();
}

/// Row-major matrix dump.
inline std::string matrix_csv(const Mat& m)
{
	std::ostringstream os;
	for (Eigen::Index r = 0; r < m.rows(); ++r) {
		for (Eigen::Index c = 0; c < m.cols(); ++c)
			os << (c ? "," : "") << fmt17(m(r, c));
		os << '\n';
	}
	return os.str();
}

} // namespace hyperobs
