#pragma once

#include "hyperobs/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

namespace hyperobs {

struct SignedEdge {
	NodeId from;
	NodeId to;
	double weight;
	friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
};

/**
 * Weighted signed digraph without self-loops. At most one edge per ordered
 * pair; every stored weight is nonzero.
 */
class SignedGraph {
public:
	SignedGraph() = default;

	/// Builds from a list of (possibly repeated) contributions: repeated
	/// pairs are summed, exact-zero sums and self-loops are dropped.
	SignedGraph(std::size_t num_nodes, const std::vector<SignedEdge>& contributions)
		: num_nodes_(num_nodes)
		, out_(num_nodes)
		, in_(num_nodes)
	{
		std::map<std::pair<NodeId, NodeId>, double> acc;
		for (const auto& c : contributions) {
			if (c.from >= num_nodes || c.to >= num_nodes)
				throw Error(ErrorKind::NodeOutOfRange, "signed edge endpoint out of range");
			if (c.from == c.to)
				continue;
			acc[{c.from, c.to}] += c.weight;
		}
		for (const auto& [key, w] : acc) {
			if (w == 0.0)
				continue;
			edges_.push_back({key.first, key.second, w});
			out_[key.first].push_back(key.second);
			in_[key.second].push_back(key.first);
		}
	}

	std::size_t num_nodes() const { return num_nodes_; }

	/// Edges sorted by (from, to).
	const std::vector<SignedEdge>& edges() const { return edges_; }

	const NodeList& successors(NodeId i) const { return out_.at(i); }
	const NodeList& predecessors(NodeId i) const { return in_.at(i); }

	double weight(NodeId from, NodeId to) const
	{
		auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(from, to), [](const SignedEdge& e, const std::pair<NodeId, NodeId>& k) {
			return std::make_pair(e.from, e.to) < k;
		});
		if (it != edges_.end() && it->from == from && it->to == to)
			return it->weight;
		return 0.0;
	}

	bool has_edge(NodeId from, NodeId to) const { return weight(from, to) != 0.0; }

private:
	std::size_t num_nodes_ = 0;
	std::vector<SignedEdge> edges_;
	std::vector<NodeList> out_;
	std::vector<NodeList> in_;
};

/// Associated signed graph of the hyperdiffusive coupling: for every edge and
/// every head i, +sigma*alpha_j on tail j -> i and -sigma*beta_j on every
/// other head j -> i.
inline SignedGraph to_signed_graph(const DirectedHypergraph& h)
{
	std::vector<SignedEdge> contrib;
	for (const auto& e : h.edges()) {
		for (NodeId i : e.heads) {
			for (std::size_t k = 0; k < e.tails.size(); ++k)
				contrib.push_back({e.tails[k], i, e.sigma * e.alpha[k]});
			for (std::size_t k = 0; k < e.heads.size(); ++k)
				if (e.heads[k] != i)
					contrib.push_back({e.heads[k], i, -e.sigma * e.beta[k]});
		}
	}
	return SignedGraph(h.num_nodes(), contrib);
}

/// Structural dependency graph: an edge tail -> head and head -> head for
/// every pair that shares a hyperedge, whatever the weights (stored weight is
/// the summed sigma). Unlike the signed graph, no pair disappears through
/// cancelling contributions or zero alpha/beta entries, so every head of a
/// hyperedge shares an SCC with the others and every tail reaches every
/// head. The observer design condenses this graph.
inline SignedGraph dependency_graph(const DirectedHypergraph& h)
{
	std::vector<SignedEdge> contrib;
	for (const auto& e : h.edges())
		for (NodeId i : e.heads) {
			for (NodeId t : e.tails)
				contrib.push_back({t, i, e.sigma});
			for (NodeId j : e.heads)
				if (j != i)
					contrib.push_back({j, i, e.sigma});
		}
	return SignedGraph(h.num_nodes(), contrib);
}

struct Component {
	NodeList nodes;
	EdgeList edges;
};

/// Largest weakly connected component of the associated signed graph, with
/// the hyperedges fully inside it. Ties go to the component holding the
/// smallest node id.
inline Component largest_connected_component(const DirectedHypergraph& h)
{
	const std::size_t n = h.num_nodes();
	if (n == 0)
		return {};
	std::vector<std::size_t> parent(n);
	std::iota(parent.begin(), parent.end(), 0);
	auto find = [&](std::size_t x) {
		while (parent[x] != x) {
			parent[x] = parent[parent[x]];
			x = parent[x];
		}
		return x;
	};
	const SignedGraph g = to_signed_graph(h);
	for (const auto& e : g.edges()) {
		auto a = find(e.from), b = find(e.to);
		if (a != b)
			parent[std::max(a, b)] = std::min(a, b);
	}
	std::vector<std::size_t> size(n, 0);
	for (std::size_t v = 0; v < n; ++v)
		++size[find(v)];
	// roots are the minimum member of each component, so scanning in
	// ascending order resolves ties toward the smallest node id
	std::size_t best = find(0);
	for (std::size_t v = 0; v < n; ++v)
		if (find(v) == v && size[v] > size[best])
			best = v;
	Component c;
	for (std::size_t v = 0; v < n; ++v)
		if (find(v) == best)
			c.nodes.push_back(v);
	c.edges = h.restrict_to(c.nodes);
	return c;
}

/**
 * Strongly connected components of the subgraph induced by a node subset and
 * their quotient DAG. Edge signs are ignored for reachability.
 *
 * SCC ids are assigned in ascending order of each component's smallest
 * member, so results do not depend on traversal order.
 */
struct Condensation {
	static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

	std::vector<std::size_t> scc_of;          ///< per node; npos if outside the subset
	std::vector<NodeList> scc_members;        ///< sorted members per SCC
	std::set<std::pair<std::size_t, std::size_t>> dag_edges;

	std::size_t num_sccs() const { return scc_members.size(); }

	/// SCC ids with no incoming DAG edge, ascending.
	std::vector<std::size_t> roots() const
	{
		std::vector<char> has_in(num_sccs(), 0);
		for (const auto& [a, b] : dag_edges)
			has_in[b] = 1;
		std::vector<std::size_t> r;
		for (std::size_t s = 0; s < num_sccs(); ++s)
			if (!has_in[s])
				r.push_back(s);
		return r;
	}
};

inline Condensation condense(const SignedGraph& g, std::span<const NodeId> on)
{
	const std::size_t n = g.num_nodes();
	std::vector<char> active(n, 0);
	for (NodeId v : on) {
		if (v >= n)
			throw Error(ErrorKind::NodeOutOfRange, "condense: node out of range");
		active[v] = 1;
	}

	// iterative Tarjan
	constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
	std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
	std::vector<char> on_stack(n, 0);
	std::vector<NodeId> stack;
	std::vector<std::pair<NodeId, std::size_t>> call; // (node, next successor position)
	std::size_t counter = 0, ncomp = 0;

	NodeList order(on.begin(), on.end());
	std::sort(order.begin(), order.end());
	order.erase(std::unique(order.begin(), order.end()), order.end());

	for (NodeId root : order) {
		if (index[root] != unvisited)
			continue;
		call.push_back({root, 0});
		index[root] = low[root] = counter++;
		stack.push_back(root);
		on_stack[root] = 1;
		while (!call.empty()) {
			auto& [v, pos] = call.back();
			const auto& succ = g.successors(v);
			if (pos < succ.size()) {
				const NodeId w = succ[pos++];
				if (!active[w])
					continue;
				if (index[w] == unvisited) {
					index[w] = low[w] = counter++;
					stack.push_back(w);
					on_stack[w] = 1;
					call.push_back({w, 0});
				} else if (on_stack[w]) {
					low[v] = std::min(low[v], index[w]);
				}
				continue;
			}
			if (low[v] == index[v]) {
				NodeId w;
				do {
					w = stack.back();
					stack.pop_back();
					on_stack[w] = 0;
					comp[w] = ncomp;
				} while (w != v);
				++ncomp;
			}
			const NodeId done = v;
			call.pop_back();
			if (!call.empty())
				low[call.back().first] = std::min(low[call.back().first], low[done]);
		}
	}

	// renumber by smallest member
	std::vector<NodeId> min_member(ncomp, std::numeric_limits<NodeId>::max());
	for (NodeId v : order)
		min_member[comp[v]] = std::min(min_member[comp[v]], v);
	std::vector<std::size_t> perm(ncomp);
	std::iota(perm.begin(), perm.end(), 0);
	std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return min_member[a] < min_member[b]; });
	std::vector<std::size_t> rank(ncomp);
	for (std::size_t k = 0; k < ncomp; ++k)
		rank[perm[k]] = k;

	Condensation c;
	c.scc_of.assign(n, Condensation::npos);
	c.scc_members.resize(ncomp);
	for (NodeId v : order) {
		c.scc_of[v] = rank[comp[v]];
		c.scc_members[c.scc_of[v]].push_back(v);
	}
	for (const auto& e : g.edges()) {
		if (!active[e.from] || !active[e.to])
			continue;
		const auto a = c.scc_of[e.from], b = c.scc_of[e.to];
		if (a != b)
			c.dag_edges.insert({a, b});
	}
	return c;
}

} // namespace hyperobs
