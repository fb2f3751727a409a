#pragma once

#include "hyperobs/assembly.hpp"
#include "hyperobs/certify.hpp"
#include "hyperobs/gain_design.hpp"
#include "hyperobs/signed_graph.hpp"
#include "hyperobs/sim.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace hyperobs {

/**
 * Sensor selection inside S: the unmeasured node with the largest
 * out-degree over the edges fully inside S; ties go to the largest in-degree
 * over the same edges, then to the smallest id. `candidates`, when given,
 * further restricts the eligible nodes.
 */
inline NodeId select_node(std::span<const NodeId> S, const DirectedHypergraph& h, std::span<const NodeId> already_measured,
	const std::vector<char>* candidates = nullptr)
{
	const auto measured = h.membership(already_measured);
	const EdgeList inside = h.restrict_to(S);
	std::optional<NodeId> best;
	Degrees bd;
	NodeList sorted(S.begin(), S.end());
	std::sort(sorted.begin(), sorted.end());
	for (NodeId v : sorted) {
		if (measured[v] || (candidates && !(*candidates)[v]))
			continue;
		const Degrees d = h.degrees(v, &inside);
		if (!best || d.out > bd.out || (d.out == bd.out && d.in > bd.in)) {
			best = v;
			bd = d;
		}
	}
	if (!best)
		throw Error(ErrorKind::AllMeasured, "every eligible node of the subset is already measured");
	return *best;
}

struct DesignOptions {
	double margin = 1.0; ///< required uniform Hurwitz margin
	double rho = 10.0;
	bool use_thm1 = true;
	bool invertible_shortcut = true;
	std::optional<double> shortcut_margin; ///< defaults to max(rho * rate, margin)
	std::optional<NodeList> allowed_measurements;
	GainDesignOptions gain;
	SlowVariationOptions thm1;
	std::size_t sample_stride = 1; ///< additional thinning of trajectory samples
	std::uint64_t seed = 0;
	std::function<void(const struct TraceEntry&)> on_trace; ///< progress hook
};

struct SubsetRecord {
	NodeList nodes;
	CertificationReport report;
	NodeList added;        ///< nodes added to the measured set while processing
	std::size_t iteration = 0;
	bool shortcut = false; ///< measured node reconstructed through an invertible output
};

struct TraceEntry {
	std::size_t iteration = 0;
	std::string action; ///< "certified", "measure", "shortcut", "failed"
	NodeList subset;
	std::optional<NodeId> node;
};

struct DesignOutcome {
	enum class Status { Complete, Failed };

	Status status = Status::Complete;
	NodeList measured;
	GainSet gains;
	std::vector<SubsetRecord> subsets;
	NodeList failed_subset;
	std::vector<TraceEntry> trace;
	double network_rate = 0.0;

	bool complete() const { return status == Status::Complete; }
	ObserverDesign design() const { return {measured, gains}; }
};

namespace detail {

inline NodeList sorted_union(NodeList a, std::span<const NodeId> b)
{
	a.insert(a.end(), b.begin(), b.end());
	std::sort(a.begin(), a.end());
	a.erase(std::unique(a.begin(), a.end()), a.end());
	return a;
}

/// Time-ordered index runs per trajectory into a flattened sample list.
inline std::vector<std::vector<std::size_t>> sequences_of(std::span<const StateSample> samples)
{
	std::map<std::size_t, std::vector<std::size_t>> by;
	for (std::size_t k = 0; k < samples.size(); ++k)
		by[samples[k].trajectory].push_back(k);
	std::vector<std::vector<std::size_t>> out;
	for (auto& [id, idx] : by) {
		std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a].time < samples[b].time; });
		out.push_back(std::move(idx));
	}
	return out;
}

/// Outside tails of edges entering S must already be settled.
inline void assert_order(const DirectedHypergraph& h, const SubsetIndex& S, const std::vector<char>& settled)
{
	for (EdgeId k : h.incoming_to(S.nodes()))
		for (NodeId t : h.edge(k).tails)
			if (!S.contains(t) && !settled[t])
				throw Error(ErrorKind::OrderViolation, "tail " + std::to_string(t) + " of an edge entering the subset is not yet observed");
}

} // namespace detail

struct CertifyResult {
	CertificationReport report;
	GainSet gains;
};

/**
 * Tries the symmetric-part route, then the slowly-varying route. Returns
 * nullopt when neither certifies S with the currently measured nodes.
 */
inline std::optional<CertifyResult> certify_or_fail(const NetworkSystem& sys, const SubsetIndex& S, const ObserverDesign& current,
	std::span<const StateSample> samples, const NodeList& settled, const DesignOptions& opt, double rate)
{
	NodeList meas;
	for (NodeId v : S.nodes())
		if (current.is_measured(v))
			meas.push_back(v);
	std::sort(meas.begin(), meas.end());
	std::vector<Vec> states;
	states.reserve(samples.size());
	for (const auto& s : samples)
		states.push_back(s.state);
	const AffineFamily fam(sys, current, S, meas, states, settled);

	GainDesignOptions gopt = opt.gain;
	gopt.rho = opt.rho;
	gopt.network_rate = rate;
	gopt.epsilon = opt.thm1.epsilon;
	gopt.kronecker_cap = opt.thm1.kronecker_cap;
	gopt.seed = derive_seed(opt.seed, S.nodes().front() * 7919 + meas.size());

	auto with_gains = [&](const GainSet& g) {
		ObserverDesign d = current;
		std::erase_if(d.gains, [&](const auto& kv) { return S.contains(kv.first.first); });
		for (const auto& [k, L] : g)
			d.gains[k] = L;
		return d;
	};

	std::optional<Mat> warm;
	try {
		const auto r = design_gain_thm2(fam, opt.margin, gopt);
		const ObserverDesign d = with_gains(r.gains);
		const ErrorSystem err(sys, d, S, settled);
		auto rep = check_thm2(err, samples, opt.margin);
		if (rep.passed)
			return CertifyResult{rep, r.gains};
		warm = r.L;
	} catch (const Error& e) {
		if (e.kind() != ErrorKind::Infeasible && e.kind() != ErrorKind::NoMeasuredNodes)
			throw;
	}
	if (!opt.use_thm1 || fam.rows() > static_cast<Eigen::Index>(opt.thm1.kronecker_cap))
		return std::nullopt;

	const auto seqs = detail::sequences_of(samples);
	bool has_pair = std::any_of(seqs.begin(), seqs.end(), [](const auto& s) { return s.size() >= 2; });
	if (!has_pair)
		return std::nullopt;
	const double dt = samples[seqs.front()[1]].time - samples[seqs.front()[0]].time;
	try {
		const auto r = design_gain_thm1(fam, opt.margin, seqs, dt, gopt, warm);
		const ObserverDesign d = with_gains(r.gains);
		const ErrorSystem err(sys, d, S, settled);
		std::vector<std::vector<Mat>> As;
		std::vector<double> gs;
		for (const auto& seq : seqs) {
			std::vector<Mat> a;
			for (std::size_t k : seq) {
				a.push_back(err.A(samples[k].state));
				gs.push_back(err.coupling_jacobian_norm(samples[k].state));
			}
			As.push_back(std::move(a));
		}
		auto rep = check_thm1(As, dt, opt.margin, opt.thm1, gs);
		rep.trajectory_ids = detail::trajectory_ids(samples);
		if (rep.passed)
			return CertifyResult{rep, r.gains};
	} catch (const Error& e) {
		if (e.kind() != ErrorKind::Infeasible && e.kind() != ErrorKind::SubsetTooLarge)
			throw;
	}
	return std::nullopt;
}

/// Gain reconstructing a measured node through an invertible output:
/// L_jj = kappa * (D_xh)^-1 with kappa pushing lambda_max of the symmetric
/// part of the node's own block to -shortcut_margin at every sample.
inline CertifyResult shortcut_gain(const NetworkSystem& sys, NodeId j, std::span<const StateSample> samples, double shortcut_margin)
{
	const auto Hinv = sys.output->constant_jacobian_inverse();
	if (!Hinv)
		throw Error(ErrorKind::InvalidArgument, "shortcut needs an output map with a constant invertible Jacobian");
	NodeList everyone(sys.num_nodes());
	std::iota(everyone.begin(), everyone.end(), 0);
	const SubsetIndex S(sys.num_nodes(), {j});
	const ObserverDesign none;
	double top = -std::numeric_limits<double>::infinity();
	for (const auto& s : samples)
		top = std::max(top, lambda_max_sym_value(assemble_A(sys, none, S, s.state, everyone)));
	const double kappa = std::max(0.0, top + shortcut_margin);
	CertifyResult r;
	r.gains[{j, j}] = kappa * *Hinv;
	r.report.passed = true;
	r.report.theorem_used = Theorem::None;
	r.report.required_margin = shortcut_margin;
	r.report.worst_value = top - kappa;
	r.report.sample_count = samples.size();
	r.report.trajectory_ids = detail::trajectory_ids(samples);
	r.report.note = "measured node reconstructed through invertible output";
	return r;
}

/**
 * Iterative observer design: repeatedly condense the signed graph on the
 * not-yet-observed nodes, certify each root SCC (adding measured nodes by
 * select_node until it certifies or is fully measured), and mark certified
 * subsets as observed. With an invertible output, a newly measured node is
 * observed directly and the condensation is recomputed.
 */
inline DesignOutcome design_observer(const NetworkSystem& sys, const std::vector<Trajectory>& trajectories, const DesignOptions& opt = {})
{
	if (trajectories.empty() || std::all_of(trajectories.begin(), trajectories.end(), [](const auto& t) { return t.states.empty(); }))
		throw Error(ErrorKind::EmptyTrajectorySet, "design needs at least one representative trajectory");
	if (!(opt.margin > 0.0))
		throw Error(ErrorKind::NonpositiveMargin, "required margin must be positive");

	std::vector<StateSample> samples;
	{
		const std::size_t st = std::max<std::size_t>(opt.sample_stride, 1);
		for (std::size_t r = 0; r < trajectories.size(); ++r)
			for (std::size_t k = 0; k < trajectories[r].states.size(); k += st)
				samples.push_back({trajectories[r].states[k], r, double(k) * trajectories[r].spacing});
	}

	DesignOutcome out;
	out.network_rate = estimate_network_rate(sys, samples, std::max<std::size_t>(samples.size() / 2000, 1));
	const double sc_margin = opt.shortcut_margin ? *opt.shortcut_margin : std::max(opt.rho * out.network_rate, opt.margin);
	const bool shortcut = opt.invertible_shortcut && sys.output->invertible() && sys.output->constant_jacobian_inverse();

	std::vector<char> allowed(sys.num_nodes(), 1);
	if (opt.allowed_measurements) {
		std::fill(allowed.begin(), allowed.end(), 0);
		for (NodeId v : *opt.allowed_measurements)
			allowed.at(v) = 1;
	}

	const SignedGraph g = dependency_graph(sys.graph);
	std::vector<char> observed(sys.num_nodes(), 0);
	NodeList observed_list;
	ObserverDesign cur;
	std::size_t iteration = 0;
	auto trace = [&](TraceEntry e) {
		if (opt.on_trace)
			opt.on_trace(e);
		out.trace.push_back(std::move(e));
	};

	auto settle = [&](std::span<const NodeId> nodes) {
		for (NodeId v : nodes)
			observed[v] = 1;
		observed_list = detail::sorted_union(observed_list, nodes);
	};

	while (observed_list.size() < sys.num_nodes()) {
		++iteration;
		NodeList residual;
		for (NodeId v = 0; v < sys.num_nodes(); ++v)
			if (!observed[v])
				residual.push_back(v);
		const Condensation c = condense(g, residual);
		bool restart = false;
		for (std::size_t root : c.roots()) {
			const NodeList& members = c.scc_members[root];
			const SubsetIndex S(sys.num_nodes(), members);
			detail::assert_order(sys.graph, S, observed);
			detail::require_head_closed(sys.graph, S, observed_list);
			SubsetRecord rec;
			rec.nodes = members;
			rec.iteration = iteration;
			while (true) {
				if (auto res = certify_or_fail(sys, S, cur, samples, observed_list, opt, out.network_rate)) {
					for (const auto& [k, L] : res->gains)
						cur.gains[k] = L;
					rec.report = res->report;
					out.subsets.push_back(rec);
					trace({iteration, "certified", members, std::nullopt});
					settle(members);
					break;
				}
				NodeId j;
				try {
					j = select_node(members, sys.graph, cur.measured, &allowed);
				} catch (const Error& e) {
					if (e.kind() != ErrorKind::AllMeasured)
						throw;
					out.status = DesignOutcome::Status::Failed;
					out.failed_subset = members;
					trace({iteration, "failed", members, std::nullopt});
					rec.report.note = "not certified with every eligible node measured";
					out.subsets.push_back(rec);
					out.measured = cur.measured;
					out.gains = cur.gains;
					return out;
				}
				cur.measured = detail::sorted_union(cur.measured, std::span<const NodeId>(&j, 1));
				rec.added.push_back(j);
				trace({iteration, "measure", members, j});
				if (shortcut) {
					auto res = shortcut_gain(sys, j, samples, sc_margin);
					for (const auto& [k, L] : res.gains)
						cur.gains[k] = L;
					SubsetRecord sr;
					sr.nodes = {j};
					sr.report = res.report;
					sr.added = {j};
					sr.iteration = iteration;
					sr.shortcut = true;
					out.subsets.push_back(sr);
					trace({iteration, "shortcut", {j}, j});
					settle(std::span<const NodeId>(&j, 1));
					restart = true;
					break;
				}
			}
			if (restart)
				break;
		}
	}
	out.measured = cur.measured;
	out.gains = cur.gains;
	return out;
}

// ---------------------------------------------------------------------------
// Robustness bounds along the design

struct SubsetBound {
	NodeList nodes;
	RobustnessBound bound;
};

struct NetworkBound {
	std::vector<SubsetBound> subsets;
	double total = 0.0; ///< sqrt of the sum of squared subset bounds
};

/**
 * Error bounds under parameter deviation mu_bar and noise nu_bar, propagated
 * through the subsets in processing order. For each subset: margin from its
 * certificate, coupling and parameter-Jacobian bounds over the samples,
 * gain norm of the subset's gains, upstream bounds of the nodes observed
 * before it.
 */
inline NetworkBound robustness_bounds(const NetworkSystem& sys, const DesignOutcome& outcome, std::span<const StateSample> samples, double mu_bar, double nu_bar)
{
	NetworkBound nb;
	std::map<NodeId, double> upstream;
	const std::size_t n = sys.n(), p = sys.p();
	double sumsq = 0.0;
	for (const auto& rec : outcome.subsets) {
		if (!rec.report.passed)
			continue;
		const SubsetIndex S(sys.num_nodes(), rec.nodes);
		RobustnessInputs in;
		in.margin = rec.report.achieved_margin();
		in.mu_bar = mu_bar;
		in.nu_bar = nu_bar;
		double g = 0.0, f = 0.0;
		for (const auto& s : samples) {
			for (EdgeId k : sys.graph.incoming_to(rec.nodes))
				g = std::max(g, spectral_norm(sys.coupling->jac(hyperdiffusive_argument(sys, sys.graph.edge(k), s.state))));
			for (NodeId v : rec.nodes)
				f = std::max(f, spectral_norm(sys.field->jac_mu(sys.node(s.state, v), sys.nominal())));
		}
		in.coupling_bound = g;
		in.param_jacobian_bound = f;
		NodeList meas;
		for (NodeId v : rec.nodes)
			if (std::binary_search(outcome.measured.begin(), outcome.measured.end(), v))
				meas.push_back(v);
		Mat L = Mat::Zero(static_cast<Eigen::Index>(n * S.size()), static_cast<Eigen::Index>(p * meas.size()));
		for (std::size_t a = 0; a < S.size(); ++a)
			for (std::size_t b = 0; b < meas.size(); ++b) {
				auto it = outcome.gains.find({S.nodes()[a], meas[b]});
				if (it != outcome.gains.end())
					L.block(static_cast<Eigen::Index>(a * n), static_cast<Eigen::Index>(b * p), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)) = it->second;
			}
		in.gain_norm = spectral_norm(L);
		// tails without a bound yet (only possible for shortcut nodes) contribute nothing
		std::map<NodeId, double> up = upstream;
		for (EdgeId k : sys.graph.incoming_to(rec.nodes))
			for (NodeId t : sys.graph.edge(k).tails)
				if (!S.contains(t) && !up.count(t))
					up[t] = 0.0;
		SubsetBound sb{rec.nodes, thm3_bound(in, sys.graph, S, up)};
		for (NodeId v : rec.nodes)
			upstream[v] = sb.bound.B;
		sumsq += sb.bound.B * sb.bound.B;
		nb.subsets.push_back(std::move(sb));
	}
	nb.total = std::sqrt(sumsq);
	return nb;
}

} // namespace hyperobs
