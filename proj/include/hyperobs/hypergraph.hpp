#pragma once

#include "hyperobs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hyperobs {

using NodeId = std::size_t;
using EdgeId = std::size_t;
using NodeList = std::vector<NodeId>;
using EdgeList = std::vector<EdgeId>;

/**
 * Directed hyperedge: ordered, disjoint tail and head sets with convex
 * combination weights and a coupling strength.
 *
 * alpha[k] belongs to tails[k] and beta[k] to heads[k].
 */
struct Hyperedge {
	NodeList tails;
	NodeList heads;
	std::vector<double> alpha;
	std::vector<double> beta;
	double sigma = 1.0;

	/// Edge with uniform weights 1/|tails| and 1/|heads|.
	static Hyperedge uniform(NodeList tails, NodeList heads, double sigma = 1.0)
	{
		Hyperedge e;
		e.alpha.assign(tails.size(), tails.empty() ? 0.0 : 1.0 / double(tails.size()));
		e.beta.assign(heads.size(), heads.empty() ? 0.0 : 1.0 / double(heads.size()));
		e.tails = std::move(tails);
		e.heads = std::move(heads);
		e.sigma = sigma;
		return e;
	}

	std::size_t cardinality() const { return tails.size() + heads.size(); }

	bool has_tail(NodeId i) const { return std::find(tails.begin(), tails.end(), i) != tails.end(); }
	bool has_head(NodeId i) const { return std::find(heads.begin(), heads.end(), i) != heads.end(); }

	/// Weight of tail i, or 0 when i is not a tail.
	double tail_weight(NodeId i) const
	{
		for (std::size_t k = 0; k < tails.size(); ++k)
			if (tails[k] == i)
				return alpha[k];
		return 0.0;
	}

	double head_weight(NodeId i) const
	{
		for (std::size_t k = 0; k < heads.size(); ++k)
			if (heads[k] == i)
				return beta[k];
		return 0.0;
	}

	friend bool operator==(const Hyperedge&, const Hyperedge&) = default;
};

/// Weight validation policy. Affine weights (negative entries allowed) are
/// off by default; the sum-to-one constraint always applies.
struct WeightPolicy {
	bool allow_affine = false;
	double sum_tolerance = 1e-12;
};

struct Degrees {
	std::size_t in = 0;
	std::size_t out = 0;
	friend bool operator==(const Degrees&, const Degrees&) = default;
};

class DirectedHypergraph {
public:
	DirectedHypergraph() = default;

	explicit DirectedHypergraph(std::size_t num_nodes, WeightPolicy policy = {})
		: num_nodes_(num_nodes)
		, policy_(policy)
		, in_(num_nodes)
		, out_(num_nodes)
	{
	}

	std::size_t num_nodes() const { return num_nodes_; }
	std::size_t num_edges() const { return edges_.size(); }
	const std::vector<Hyperedge>& edges() const { return edges_; }
	const Hyperedge& edge(EdgeId k) const { return edges_.at(k); }
	const WeightPolicy& policy() const { return policy_; }

	/// Validates and appends. Throws Error on any invariant violation; the
	/// hypergraph is left unchanged in that case.
	DirectedHypergraph& add_hyperedge(Hyperedge e)
	{
		validate(e);
		const EdgeId id = edges_.size();
		for (NodeId t : e.tails)
			out_[t].push_back(id);
		for (NodeId h : e.heads)
			in_[h].push_back(id);
		edges_.push_back(std::move(e));
		return *this;
	}

	void validate(const Hyperedge& e) const
	{
		if (e.tails.empty() || e.heads.empty())
			throw Error(ErrorKind::EmptyEdgeSide, "hyperedge needs at least one tail and one head");
		if (e.alpha.size() != e.tails.size() || e.beta.size() != e.heads.size())
			throw Error(ErrorKind::DimensionMismatch, "weight vector length differs from tail/head count");
		for (NodeId v : e.tails)
			check_node(v);
		for (NodeId v : e.heads)
			check_node(v);
		NodeList t = e.tails, h = e.heads;
		std::sort(t.begin(), t.end());
		std::sort(h.begin(), h.end());
		if (std::adjacent_find(t.begin(), t.end()) != t.end() || std::adjacent_find(h.begin(), h.end()) != h.end())
			throw Error(ErrorKind::OverlappingTailsHeads, "repeated node inside tails or heads");
		NodeList common;
		std::set_intersection(t.begin(), t.end(), h.begin(), h.end(), std::back_inserter(common));
		if (!common.empty())
			throw Error(ErrorKind::OverlappingTailsHeads, "node " + std::to_string(common.front()) + " is both tail and head");
		double sa = 0.0, sb = 0.0;
		for (double a : e.alpha) {
			if (!std::isfinite(a))
				throw Error(ErrorKind::WeightSumViolation, "non-finite tail weight");
			if (a < 0.0 && !policy_.allow_affine)
				throw Error(ErrorKind::NegativeWeight, "negative tail weight");
			sa += a;
		}
		for (double b : e.beta) {
			if (!std::isfinite(b))
				throw Error(ErrorKind::WeightSumViolation, "non-finite head weight");
			if (b < 0.0 && !policy_.allow_affine)
				throw Error(ErrorKind::NegativeWeight, "negative head weight");
			sb += b;
		}
		if (std::abs(sa - 1.0) > policy_.sum_tolerance || std::abs(sb - 1.0) > policy_.sum_tolerance)
			throw Error(ErrorKind::WeightSumViolation, "tail or head weights do not sum to one");
		if (!(e.sigma > 0.0) || !std::isfinite(e.sigma))
			throw Error(ErrorKind::InvalidArgument, "coupling strength must be positive");
	}

	void check_node(NodeId i) const
	{
		if (i >= num_nodes_)
			throw Error(ErrorKind::NodeOutOfRange, "node " + std::to_string(i) + " >= " + std::to_string(num_nodes_));
	}

	// ---- edge queries; all results sorted by edge index ----

	/// Edges having i as a head.
	const EdgeList& incoming(NodeId i) const
	{
		check_node(i);
		return in_[i];
	}

	/// Edges having i as a tail.
	const EdgeList& outgoing(NodeId i) const
	{
		check_node(i);
		return out_[i];
	}

	/// Edges whose tails and heads all lie in S.
	EdgeList restrict_to(std::span<const NodeId> S) const
	{
		const auto mask = membership(S);
		EdgeList r;
		for (EdgeId k = 0; k < edges_.size(); ++k)
			if (inside(edges_[k], mask))
				r.push_back(k);
		return r;
	}

	/// Edges with at least one head in S.
	EdgeList incoming_to(std::span<const NodeId> S) const
	{
		const auto mask = membership(S);
		EdgeList r;
		for (EdgeId k = 0; k < edges_.size(); ++k)
			if (std::any_of(edges_[k].heads.begin(), edges_[k].heads.end(), [&](NodeId h) { return mask[h]; }))
				r.push_back(k);
		return r;
	}

	/// Edges with a head in S that are not fully contained in S.
	EdgeList boundary(std::span<const NodeId> S) const
	{
		const auto mask = membership(S);
		EdgeList r;
		for (EdgeId k : incoming_to(S))
			if (!inside(edges_[k], mask))
				r.push_back(k);
		return r;
	}

	/// Edges with j as a tail and i as a head.
	EdgeList pair(NodeId j, NodeId i) const
	{
		check_node(i);
		check_node(j);
		EdgeList r;
		for (EdgeId k : in_[i])
			if (edges_[k].has_tail(j))
				r.push_back(k);
		return r;
	}

	/// Edges having both i and j as heads.
	EdgeList cohead(NodeId i, NodeId j) const
	{
		check_node(i);
		check_node(j);
		EdgeList r;
		for (EdgeId k : in_[i])
			if (edges_[k].has_head(j))
				r.push_back(k);
		return r;
	}

	/// Union of the tails of the given edges, sorted.
	NodeList tails_of(std::span<const EdgeId> sub) const
	{
		NodeList r;
		for (EdgeId k : sub)
			r.insert(r.end(), edge(k).tails.begin(), edge(k).tails.end());
		std::sort(r.begin(), r.end());
		r.erase(std::unique(r.begin(), r.end()), r.end());
		return r;
	}

	/// (in, out) degree of node i, optionally counting only edges in `within`.
	Degrees degrees(NodeId i, const EdgeList* within = nullptr) const
	{
		check_node(i);
		if (!within)
			return {in_[i].size(), out_[i].size()};
		Degrees d;
		for (EdgeId k : *within) {
			const auto& e = edge(k);
			if (e.has_head(i))
				++d.in;
			if (e.has_tail(i))
				++d.out;
		}
		return d;
	}

	std::vector<char> membership(std::span<const NodeId> S) const
	{
		std::vector<char> mask(num_nodes_, 0);
		for (NodeId v : S) {
			check_node(v);
			mask[v] = 1;
		}
		return mask;
	}

	friend bool operator==(const DirectedHypergraph& a, const DirectedHypergraph& b)
	{
		return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
	}

private:
	static bool inside(const Hyperedge& e, const std::vector<char>& mask)
	{
		return std::all_of(e.tails.begin(), e.tails.end(), [&](NodeId v) { return mask[v]; })
			&& std::all_of(e.heads.begin(), e.heads.end(), [&](NodeId v) { return mask[v]; });
	}

	std::size_t num_nodes_ = 0;
	WeightPolicy policy_;
	std::vector<Hyperedge> edges_;
	std::vector<EdgeList> in_;
	std::vector<EdgeList> out_;
};

/// Value-semantics form of DirectedHypergraph::add_hyperedge.
inline DirectedHypergraph add_hyperedge(DirectedHypergraph h, Hyperedge e)
{
	h.add_hyperedge(std::move(e));
	return h;
}

/// Sub-hypergraph on `nodes` (relabelled 0..|nodes|-1 in the given order),
/// keeping only edges fully contained in the node set.
struct InducedHypergraph {
	DirectedHypergraph graph;
	NodeList original_ids;
};

inline InducedHypergraph induced_subhypergraph(const DirectedHypergraph& h, std::span<const NodeId> nodes)
{
	std::vector<std::size_t> relabel(h.num_nodes(), std::size_t(-1));
	for (std::size_t k = 0; k < nodes.size(); ++k) {
		h.check_node(nodes[k]);
		relabel[nodes[k]] = k;
	}
	InducedHypergraph out{DirectedHypergraph(nodes.size(), h.policy()), NodeList(nodes.begin(), nodes.end())};
	for (EdgeId k : h.restrict_to(nodes)) {
		Hyperedge e = h.edge(k);
		for (auto& v : e.tails)
			v = relabel[v];
		for (auto& v : e.heads)
			v = relabel[v];
		out.graph.add_hyperedge(std::move(e));
	}
	return out;
}

} // namespace hyperobs
