#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hyperobs;

namespace {

std::vector<Trajectory> small_ensemble(const NetworkSystem& sys, double lo, double hi, std::uint64_t seed = 1)
{
	TrajectoryEnsembleSpec t;
	t.count = 4;
	t.horizon = 1.0;
	t.dt = 0.01;
	t.stride = 5;
	t.box.lo = Vec::Constant(static_cast<Eigen::Index>(sys.n()), lo);
	t.box.hi = Vec::Constant(static_cast<Eigen::Index>(sys.n()), hi);
	t.seed = seed;
	return generate_trajectories(sys, t);
}

NetworkSystem linear_network(DirectedHypergraph h, double a)
{
	return NetworkSystem(std::move(h), std::make_shared<LinearField>(Mat::Constant(1, 1, a)), builtin_tanh_coupling(0.2, 0.0, 1.0, 1),
		std::make_shared<LinearOutput>(LinearOutput::identity(1)));
}

} // namespace

TEST(SelectNode, MatchesBruteForceMaximiser)
{
	Rng rng(1);
	for (int trial = 0; trial < 100; ++trial) {
		const auto h = oracle::random_hypergraph(rng, 12, 14, 3);
		NodeList pool(12);
		std::iota(pool.begin(), pool.end(), 0);
		rng.partial_shuffle(pool, 10);
		const NodeList S(pool.begin(), pool.begin() + 10);
		NodeList measured;
		for (NodeId v : S)
			if (rng.uniform01() < 0.3)
				measured.push_back(v);
		if (measured.size() == S.size())
			continue;
		std::sort(measured.begin(), measured.end());
		EXPECT_EQ(select_node(S, h, measured), oracle::brute_select(h, S, measured));
	}
}

TEST(SelectNode, TiesAndExhaustion)
{
	DirectedHypergraph h(4);
	h.add_hyperedge(Hyperedge::uniform({2}, {3}));
	h.add_hyperedge(Hyperedge::uniform({1}, {0}));
	EXPECT_EQ(select_node(NodeList{3, 2, 1, 0}, h, NodeList{}), 1u);
	EXPECT_EQ(select_node(NodeList{3, 0}, DirectedHypergraph(4), NodeList{}), 0u);
	DirectedHypergraph u(3);
	u.add_hyperedge(Hyperedge::uniform({0}, {1}));
	u.add_hyperedge(Hyperedge::uniform({2}, {1}));
	u.add_hyperedge(Hyperedge::uniform({2}, {0}));
	EXPECT_EQ(select_node(NodeList{0, 1, 2}, u, NodeList{}), 2u);
	try {
		select_node(NodeList{0, 1}, u, NodeList{0, 1});
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::AllMeasured);
	}
}

TEST(Designer, ContractingNetworkNeedsNoSensors)
{
	DirectedHypergraph h(3);
	h.add_hyperedge(Hyperedge::uniform({0}, {1, 2}));
	const auto sys = linear_network(h, -5.0);
	const auto out = design_observer(sys, small_ensemble(sys, -1, 1));
	EXPECT_TRUE(out.complete());
	EXPECT_TRUE(out.measured.empty());
	NodeList covered;
	for (const auto& r : out.subsets) {
		EXPECT_TRUE(r.report.passed);
		covered = detail::sorted_union(covered, r.nodes);
	}
	EXPECT_EQ(covered, (NodeList{0, 1, 2}));
}

TEST(Designer, ForbiddenSensorGivesFailure)
{
	const auto sys = linear_network(DirectedHypergraph(2), 1.0);
	DesignOptions o;
	o.allowed_measurements = NodeList{0};
	const auto out = design_observer(sys, small_ensemble(sys, -1, 1), o);
	EXPECT_FALSE(out.complete());
	EXPECT_EQ(out.failed_subset, NodeList{1});
	EXPECT_EQ(out.measured, NodeList{0});
	EXPECT_EQ(out.trace.back().action, "failed");
}

TEST(Designer, UnstableNodesAreAllMeasuredWhenNeeded)
{
	const auto sys = linear_network(DirectedHypergraph(3), 1.0);
	const auto out = design_observer(sys, small_ensemble(sys, -1, 1));
	EXPECT_TRUE(out.complete());
	EXPECT_EQ(out.measured, (NodeList{0, 1, 2}));
	for (const auto& r : out.subsets)
		EXPECT_TRUE(r.shortcut);
	DesignOptions o;
	o.invertible_shortcut = false;
	const auto out2 = design_observer(sys, small_ensemble(sys, -1, 1), o);
	EXPECT_TRUE(out2.complete());
	EXPECT_EQ(out2.measured, (NodeList{0, 1, 2}));
	for (NodeId j = 0; j < 3; ++j)
		EXPECT_LE(1.0 - out2.gains.at({j, j})(0, 0), -1.0 + 1e-6);
}

TEST(Designer, ChainCertifiesDownstreamThroughCoupling)
{
	// 0 drives 1; 1 is stable on its own, 0 is not
	DirectedHypergraph h(2);
	h.add_hyperedge(Hyperedge::uniform({0}, {1}, 1.0));
	NetworkSystem sys(h, std::make_shared<LinearField>(Mat::Constant(1, 1, 0.5)), builtin_tanh_coupling(3.0, 0.0, 1.0, 1),
		std::make_shared<LinearOutput>(LinearOutput::identity(1)));
	const auto out = design_observer(sys, small_ensemble(sys, -1, 1));
	ASSERT_TRUE(out.complete());
	EXPECT_EQ(out.measured, NodeList{0});
	// upstream subsets come first
	EXPECT_EQ(out.subsets.front().nodes, NodeList{0});
	EXPECT_EQ(out.subsets.back().nodes, NodeList{1});
	EXPECT_EQ(out.subsets.back().report.theorem_used, Theorem::SymmetricPart);
}

TEST(Designer, SubsetsAreHeadClosedAndOrdered)
{
	Rng rng(2);
	for (int trial = 0; trial < 10; ++trial) {
		const auto h = oracle::random_hypergraph(rng, 7, 7, 2);
		const auto sys = oracle::random_system(h, 1);
		DesignOptions o;
		o.invertible_shortcut = false;
		o.use_thm1 = false;
		const auto out = design_observer(sys, small_ensemble(sys, -2, 2, trial), o);
		std::vector<char> seen(7, 0);
		for (const auto& r : out.subsets) {
			EXPECT_TRUE(check_head_closed(h, r.nodes));
			for (EdgeId k : h.incoming_to(r.nodes))
				for (NodeId t : h.edge(k).tails)
					EXPECT_TRUE(seen[t] || std::find(r.nodes.begin(), r.nodes.end(), t) != r.nodes.end());
			for (NodeId v : r.nodes)
				seen[v] = 1;
		}
		if (out.complete())
			EXPECT_EQ(std::count(seen.begin(), seen.end(), 1), 7);
	}
}

TEST(Designer, Reproducible)
{
	Rng rng(3);
	const auto sys = oracle::random_system(oracle::random_hypergraph(rng, 6, 6, 2), 1);
	const auto tr = small_ensemble(sys, -2, 2);
	DesignOptions o;
	o.invertible_shortcut = false;
	const auto a = design_observer(sys, tr, o), b = design_observer(sys, tr, o);
	EXPECT_EQ(a.measured, b.measured);
	ASSERT_EQ(a.gains.size(), b.gains.size());
	for (const auto& [k, L] : a.gains)
		EXPECT_EQ(L, b.gains.at(k));
	ASSERT_EQ(a.trace.size(), b.trace.size());
	for (std::size_t i = 0; i < a.trace.size(); ++i)
		EXPECT_EQ(a.trace[i].action, b.trace[i].action);
}

TEST(Designer, Errors)
{
	const auto sys = linear_network(DirectedHypergraph(2), -1.0);
	try {
		design_observer(sys, {});
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::EmptyTrajectorySet);
	}
	DesignOptions o;
	o.margin = -1.0;
	EXPECT_THROW(design_observer(sys, small_ensemble(sys, -1, 1), o), Error);
}

TEST(Designer, OrderAssertion)
{
	DirectedHypergraph h(2);
	h.add_hyperedge(Hyperedge::uniform({0}, {1}));
	std::vector<char> settled(2, 0);
	EXPECT_THROW(detail::assert_order(h, SubsetIndex(2, {1}), settled), Error);
	settled[0] = 1;
	EXPECT_NO_THROW(detail::assert_order(h, SubsetIndex(2, {1}), settled));
}

TEST(Designer, RobustnessBoundsScaleWithUncertainty)
{
	DirectedHypergraph h(2);
	h.add_hyperedge(Hyperedge::uniform({0}, {1}, 1.0));
	const auto sys = oracle::random_system(h, 1);
	const auto tr = small_ensemble(sys, -2, 2);
	DesignOptions o;
	o.invertible_shortcut = false;
	const auto out = design_observer(sys, tr, o);
	ASSERT_TRUE(out.complete());
	const auto s = flatten(tr);
	EXPECT_EQ(robustness_bounds(sys, out, s, 0.0, 0.0).total, 0.0);
	const double b1 = robustness_bounds(sys, out, s, 0.1, 0.0).total;
	const double b2 = robustness_bounds(sys, out, s, 0.2, 0.0).total;
	EXPECT_GT(b1, 0.0);
	EXPECT_NEAR(b2, 2.0 * b1, 1e-12 * b2);
	EXPECT_GT(robustness_bounds(sys, out, s, 0.1, 0.1).total, b1);
}
