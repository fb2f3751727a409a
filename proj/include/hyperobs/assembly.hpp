#pragma once

#include "hyperobs/dynamics.hpp"
#include "hyperobs/linalg.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hyperobs {

/// Ordered node subset S = (s_1..s_M) with a node -> position lookup.
class SubsetIndex {
public:
	SubsetIndex() = default;

	SubsetIndex(std::size_t num_nodes, NodeList nodes) : nodes_(std::move(nodes)), pos_(num_nodes, -1)
	{
		for (std::size_t k = 0; k < nodes_.size(); ++k) {
			const NodeId v = nodes_[k];
			if (v >= num_nodes)
				throw Error(ErrorKind::NodeOutOfRange, "subset node " + std::to_string(v) + " out of range");
			if (pos_[v] >= 0)
				throw Error(ErrorKind::InvalidArgument, "duplicate node " + std::to_string(v) + " in subset");
			pos_[v] = static_cast<std::ptrdiff_t>(k);
		}
	}

	const NodeList& nodes() const { return nodes_; }
	std::size_t size() const { return nodes_.size(); }
	std::size_t num_nodes() const { return pos_.size(); }
	bool contains(NodeId v) const { return v < pos_.size() && pos_[v] >= 0; }
	/// Position of v in S, or -1.
	std::ptrdiff_t position(NodeId v) const { return v < pos_.size() ? pos_[v] : -1; }

private:
	NodeList nodes_;
	std::vector<std::ptrdiff_t> pos_;
};

/// True iff every edge with a head in S has all of its heads in S.
inline bool check_head_closed(const DirectedHypergraph& h, std::span<const NodeId> S)
{
	const auto mask = h.membership(S);
	for (const auto& e : h.edges()) {
		const bool touches = std::any_of(e.heads.begin(), e.heads.end(), [&](NodeId v) { return mask[v]; });
		if (touches && !std::all_of(e.heads.begin(), e.heads.end(), [&](NodeId v) { return mask[v]; }))
			return false;
	}
	return true;
}

namespace detail {

/// Throws unless every head outside S of an edge touching S is listed in
/// `settled` (nodes whose errors are handled upstream).
inline void require_head_closed(const DirectedHypergraph& h, const SubsetIndex& S, std::span<const NodeId> settled)
{
	std::vector<char> ok(h.num_nodes(), 0);
	for (NodeId v : settled)
		ok.at(v) = 1;
	for (NodeId s : S.nodes())
		for (EdgeId k : h.incoming(s))
			for (NodeId v : h.edge(k).heads)
				if (!S.contains(v) && !ok[v])
					throw Error(ErrorKind::SubsetNotHeadClosed,
						"head " + std::to_string(v) + " of edge " + std::to_string(k) + " lies outside the subset");
}

inline std::size_t idx(std::size_t node_pos, std::size_t n) { return node_pos * n; }

} // namespace detail

/**
 * Linearized error-dynamics matrix A_S at estimator state xhat.
 *
 * Block (i,i): D_xf(xhat_si) - L_{si si} D_xh(xhat_si) - sum over edges with
 * head s_i of sigma*beta_si*D_xg. Block (i,j): -L_{si sj} D_xh(xhat_sj)
 * + sum over edges with tail s_j and head s_i of sigma*alpha_sj*D_xg
 * - sum over edges with heads s_i and s_j of sigma*beta_sj*D_xg.
 *
 * The tail sum runs over every edge with tail s_j and head s_i, including
 * edges with further tails outside S; those outside tails are collected by
 * assemble_b, so A_S e_S + b_S reproduces the linearized error field.
 *
 * S must be head-closed, except for heads listed in `settled`.
 */
inline Mat assemble_A(const NetworkSystem& sys, const ObserverDesign& design, const SubsetIndex& S, const Vec& xhat, std::span<const NodeId> settled = {})
{
	detail::check_state(sys, xhat, "assemble_A");
	detail::require_head_closed(sys.graph, S, settled);
	const std::size_t n = sys.n(), M = S.size();
	const auto ni = static_cast<Eigen::Index>(n);
	Mat A = Mat::Zero(static_cast<Eigen::Index>(n * M), static_cast<Eigen::Index>(n * M));
	std::unordered_map<EdgeId, Mat> dg;
	for (std::size_t a = 0; a < M; ++a) {
		const NodeId si = S.nodes()[a];
		const auto ra = static_cast<Eigen::Index>(a * n);
		A.block(ra, ra, ni, ni) += sys.field->jac_x(sys.node(xhat, si), sys.nominal());
		for (EdgeId k : sys.graph.incoming(si)) {
			const Hyperedge& e = sys.graph.edge(k);
			auto it = dg.find(k);
			if (it == dg.end())
				it = dg.emplace(k, sys.coupling->jac(hyperdiffusive_argument(sys, e, xhat))).first;
			const Mat& G = it->second;
			for (std::size_t t = 0; t < e.tails.size(); ++t) {
				const auto pb = S.position(e.tails[t]);
				if (pb >= 0)
					A.block(ra, pb * ni, ni, ni) += e.sigma * e.alpha[t] * G;
			}
			for (std::size_t t = 0; t < e.heads.size(); ++t) {
				const auto pb = S.position(e.heads[t]);
				if (pb >= 0)
					A.block(ra, pb * ni, ni, ni) -= e.sigma * e.beta[t] * G;
			}
		}
	}
	for (const auto& [key, L] : design.gains) {
		const auto [i, j] = key;
		const auto pi = S.position(i), pj = S.position(j);
		if (pi < 0 || pj < 0 || !design.is_measured(j))
			continue;
		A.block(pi * ni, pj * ni, ni, ni) -= L * sys.output->jac(sys.node(xhat, j));
	}
	return A;
}

using ErrorMap = std::map<NodeId, Vec>;

/**
 * Exogenous input b_S: contributions of errors of nodes outside S through
 * the hyperedges entering S (outside tails with +alpha, settled outside heads
 * with -beta), plus correction terms from any gains L_{si j} with j outside S.
 * With head-closed S and gains confined to S this is exactly the tail sum.
 */
inline Vec assemble_b(const NetworkSystem& sys, const SubsetIndex& S, const Vec& xhat, const ErrorMap& outside, std::span<const NodeId> settled = {},
	const ObserverDesign* design = nullptr)
{
	detail::check_state(sys, xhat, "assemble_b");
	detail::require_head_closed(sys.graph, S, settled);
	const std::size_t n = sys.n(), M = S.size();
	const auto ni = static_cast<Eigen::Index>(n);
	auto error_of = [&](NodeId v) -> const Vec& {
		auto it = outside.find(v);
		if (it == outside.end())
			throw Error(ErrorKind::MissingOutsideError, "no error supplied for outside node " + std::to_string(v));
		if (static_cast<std::size_t>(it->second.size()) != n)
			throw Error(ErrorKind::DimensionMismatch, "outside error has wrong dimension");
		return it->second;
	};
	Vec b = Vec::Zero(static_cast<Eigen::Index>(n * M));
	for (std::size_t a = 0; a < M; ++a) {
		const NodeId si = S.nodes()[a];
		Vec acc = Vec::Zero(ni);
		for (EdgeId k : sys.graph.incoming(si)) {
			const Hyperedge& e = sys.graph.edge(k);
			Vec z = Vec::Zero(ni);
			bool any = false;
			for (std::size_t t = 0; t < e.tails.size(); ++t)
				if (!S.contains(e.tails[t])) {
					z += e.alpha[t] * error_of(e.tails[t]);
					any = true;
				}
			for (std::size_t t = 0; t < e.heads.size(); ++t)
				if (!S.contains(e.heads[t])) {
					z -= e.beta[t] * error_of(e.heads[t]);
					any = true;
				}
			if (any)
				acc += e.sigma * (sys.coupling->jac(hyperdiffusive_argument(sys, e, xhat)) * z);
		}
		b.segment(static_cast<Eigen::Index>(a * n), ni) = acc;
	}
	if (design) {
		for (const auto& [key, L] : design->gains) {
			const auto [i, j] = key;
			const auto pi = S.position(i);
			if (pi < 0 || S.contains(j) || !design->is_measured(j))
				continue;
			b.segment(pi * ni, ni) -= L * (sys.output->jac(sys.node(xhat, j)) * error_of(j));
		}
	}
	return b;
}

/**
 * Output-sensing matrix for gain design: with measured nodes m_1..m_K of S,
 * A_S(L) = A_S(0) - L * C where L stacks the blocks L_{si mk} (nM x pK) and C
 * (pK x nM) holds D_xh(xhat_mk) in block (k, position of m_k).
 */
inline Mat assemble_sensing(const NetworkSystem& sys, const SubsetIndex& S, std::span<const NodeId> measured_in_S, const Vec& xhat)
{
	const std::size_t n = sys.n(), p = sys.p(), M = S.size(), K = measured_in_S.size();
	const auto ni = static_cast<Eigen::Index>(n), pi = static_cast<Eigen::Index>(p);
	Mat C = Mat::Zero(static_cast<Eigen::Index>(p * K), static_cast<Eigen::Index>(n * M));
	for (std::size_t k = 0; k < K; ++k) {
		const auto pos = S.position(measured_in_S[k]);
		if (pos < 0)
			throw Error(ErrorKind::InvalidArgument, "measured node outside the subset");
		C.block(static_cast<Eigen::Index>(k) * pi, pos * ni, pi, ni) = sys.output->jac(sys.node(xhat, measured_in_S[k]));
	}
	return C;
}

/// A_S and b_S evaluators for a fixed subset and design.
class ErrorSystem {
public:
	ErrorSystem(const NetworkSystem& sys, const ObserverDesign& design, SubsetIndex S, NodeList settled = {})
		: sys_(&sys)
		, design_(&design)
		, S_(std::move(S))
		, settled_(std::move(settled))
	{
		detail::require_head_closed(sys.graph, S_, settled_);
	}

	const SubsetIndex& subset() const { return S_; }
	const NetworkSystem& system() const { return *sys_; }
	const ObserverDesign& design() const { return *design_; }
	const NodeList& settled() const { return settled_; }
	std::size_t dim() const { return S_.size() * sys_->n(); }

	Mat A(const Vec& xhat) const { return assemble_A(*sys_, *design_, S_, xhat, settled_); }
	Vec b(const Vec& xhat, const ErrorMap& outside) const { return assemble_b(*sys_, S_, xhat, outside, settled_, design_); }

	/// Largest ||D_xg|| over the edges entering S at xhat.
	double coupling_jacobian_norm(const Vec& xhat) const
	{
		double worst = 0.0;
		for (EdgeId k : sys_->graph.incoming_to(S_.nodes()))
			worst = std::max(worst, spectral_norm(sys_->coupling->jac(hyperdiffusive_argument(*sys_, sys_->graph.edge(k), xhat))));
		return worst;
	}

private:
	const NetworkSystem* sys_;
	const ObserverDesign* design_;
	SubsetIndex S_;
	NodeList settled_;
};

} // namespace hyperobs
