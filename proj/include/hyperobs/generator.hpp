#pragma once

#include "hyperobs/hypergraph.hpp"
#include "hyperobs/rng.hpp"

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace hyperobs {

/**
 * Parameters of the layered (hierarchical) hypergraph generator.
 *
 * Nodes are partitioned into consecutive layers. Every generated hyperedge
 * has `cardinality` members: source edges have one tail and cardinality-1
 * heads, sink edges have cardinality-1 tails and one head. Intra counts are
 * per layer; inter counts are per boundary between layer i and i+1 (tails in
 * i, heads in i+1).
 */
struct HierarchicalGenSpec {
	std::vector<std::size_t> layer_sizes;
	std::size_t cardinality = 3;
	std::vector<std::size_t> src_intra;
	std::vector<std::size_t> snk_intra;
	std::vector<std::size_t> src_inter;
	std::vector<std::size_t> snk_inter;
	std::uint64_t seed = 0;
	double sigma = 1.0;

	std::size_t num_nodes() const { return std::accumulate(layer_sizes.begin(), layer_sizes.end(), std::size_t(0)); }

	/// First node id of layer l.
	std::size_t layer_offset(std::size_t l) const
	{
		return std::accumulate(layer_sizes.begin(), layer_sizes.begin() + static_cast<std::ptrdiff_t>(l), std::size_t(0));
	}

	friend bool operator==(const HierarchicalGenSpec&, const HierarchicalGenSpec&) = default;
};

namespace detail {

inline NodeList sample_layer(Rng& rng, const HierarchicalGenSpec& spec, std::size_t layer, std::size_t k)
{
	if (spec.layer_sizes[layer] < k)
		throw Error(ErrorKind::LayerTooSmall,
			"layer " + std::to_string(layer) + " has " + std::to_string(spec.layer_sizes[layer]) + " nodes, need " + std::to_string(k));
	NodeList pool(spec.layer_sizes[layer]);
	std::iota(pool.begin(), pool.end(), spec.layer_offset(layer));
	rng.partial_shuffle(pool, k);
	pool.resize(k);
	return pool;
}

} // namespace detail

/**
 * Generates a hierarchical directed hypergraph. Deterministic given the seed.
 *
 * Order of generation: for each layer, its source then sink intra edges; then
 * for each boundary, its source then sink inter edges.
 */
inline DirectedHypergraph generate_hierarchical(const HierarchicalGenSpec& spec)
{
	const std::size_t layers = spec.layer_sizes.size();
	if (layers == 0)
		throw Error(ErrorKind::InvalidArgument, "at least one layer is required");
	if (spec.cardinality < 2)
		throw Error(ErrorKind::InvalidArgument, "cardinality must be >= 2");
	if (spec.src_intra.size() != layers || spec.snk_intra.size() != layers)
		throw Error(ErrorKind::DimensionMismatch, "intra counts need one entry per layer");
	const std::size_t boundaries = layers - 1;
	auto inter_ok = [&](const std::vector<std::size_t>& v) { return v.size() == boundaries || (v.empty() && boundaries == 0); };
	if (!inter_ok(spec.src_inter) || !inter_ok(spec.snk_inter))
		throw Error(ErrorKind::DimensionMismatch, "inter counts need one entry per layer boundary");
	for (std::size_t l = 0; l < layers; ++l)
		if (spec.layer_sizes[l] == 0 || spec.layer_sizes[l] + 1 < spec.cardinality)
			throw Error(ErrorKind::LayerTooSmall, "layer " + std::to_string(l) + " is smaller than cardinality-1");

	const std::size_t c = spec.cardinality;
	Rng rng(spec.seed);
	DirectedHypergraph h(spec.num_nodes());

	for (std::size_t l = 0; l < layers; ++l) {
		for (std::size_t k = 0; k < spec.src_intra[l]; ++k) {
			NodeList pick = detail::sample_layer(rng, spec, l, c);
			h.add_hyperedge(Hyperedge::uniform({pick[0]}, NodeList(pick.begin() + 1, pick.end()), spec.sigma));
		}
		for (std::size_t k = 0; k < spec.snk_intra[l]; ++k) {
			NodeList pick = detail::sample_layer(rng, spec, l, c);
			h.add_hyperedge(Hyperedge::uniform(NodeList(pick.begin(), pick.end() - 1), {pick.back()}, spec.sigma));
		}
	}
	for (std::size_t l = 0; l < boundaries; ++l) {
		for (std::size_t k = 0; k < spec.src_inter[l]; ++k) {
			NodeList tail = detail::sample_layer(rng, spec, l, 1);
			NodeList heads = detail::sample_layer(rng, spec, l + 1, c - 1);
			h.add_hyperedge(Hyperedge::uniform(tail, heads, spec.sigma));
		}
		for (std::size_t k = 0; k < spec.snk_inter[l]; ++k) {
			NodeList tails = detail::sample_layer(rng, spec, l, c - 1);
			NodeList head = detail::sample_layer(rng, spec, l + 1, 1);
			h.add_hyperedge(Hyperedge::uniform(tails, head, spec.sigma));
		}
	}
	return h;
}

} // namespace hyperobs
