#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hyperobs;

namespace {

NetworkSystem lorenz_network(DirectedHypergraph h)
{
	return NetworkSystem(std::move(h), builtin_lorenz(), builtin_tanh_coupling(0.2, 0.05, 2.0, 3), std::make_shared<LinearOutput>(LinearOutput::identity(3)));
}

Vec random_state(Rng& rng, std::size_t len, double scale)
{
	Vec x(static_cast<Eigen::Index>(len));
	for (Eigen::Index k = 0; k < x.size(); ++k)
		x[k] = rng.uniform(-scale, scale);
	return x;
}

} // namespace

TEST(AssembleA, SingleUncoupledNode)
{
	const auto sys = lorenz_network(DirectedHypergraph(1));
	Vec xh(3);
	xh << 1.0, -2.0, 3.0;
	const Mat A = assemble_A(sys, {}, SubsetIndex(1, {0}), xh);
	EXPECT_EQ(A, sys.field->jac_x(xh, sys.nominal()));
}

TEST(AssembleA, MeasuredNodeWithScalarGain)
{
	const auto sys = lorenz_network(DirectedHypergraph(1));
	ObserverDesign d;
	d.measured = {0};
	d.gains[{0, 0}] = 7.0 * Mat::Identity(3, 3);
	Vec xh(3);
	xh << 0.5, 0.5, 20.0;
	const Mat A = assemble_A(sys, d, SubsetIndex(1, {0}), xh);
	EXPECT_LE((A - (sys.field->jac_x(xh, sys.nominal()) - 7.0 * Mat::Identity(3, 3))).norm(), 1e-14);
}

TEST(AssembleA, NoEdgesNoMeasurementIsBlockDiagonal)
{
	const auto sys = lorenz_network(DirectedHypergraph(3));
	Rng rng(1);
	const Vec xh = random_state(rng, 9, 10.0);
	const Mat A = assemble_A(sys, {}, SubsetIndex(3, {2, 0, 1}), xh);
	const NodeList order{2, 0, 1};
	for (std::size_t a = 0; a < 3; ++a)
		for (std::size_t b = 0; b < 3; ++b) {
			const Mat blk = A.block(static_cast<Eigen::Index>(3 * a), static_cast<Eigen::Index>(3 * b), 3, 3);
			if (a == b)
				EXPECT_EQ(blk, sys.field->jac_x(sys.node(xh, order[a]), sys.nominal()));
			else
				EXPECT_TRUE(blk.isZero(0.0));
		}
}

TEST(AssembleA, FullSetMatchesLinearizedErrorField)
{
	Rng rng(2);
	const auto sys = oracle::random_system(oracle::random_hypergraph(rng, 6, 9, 2), 3);
	ObserverDesign d;
	d.measured = {0, 4};
	d.gains[{0, 0}] = 5.0 * Mat::Identity(3, 3);
	d.gains[{2, 4}] = Mat::Ones(3, 3);
	const Vec xh = random_state(rng, 18, 10.0);
	NodeList all{0, 1, 2, 3, 4, 5};
	const Mat A = assemble_A(sys, d, SubsetIndex(6, all), xh);
	for (int t = 0; t < 10; ++t) {
		Vec e(18);
		for (Eigen::Index k = 0; k < 18; ++k)
			e[k] = rng.normal();
		const Vec fd = oracle::fd_error_linearization(sys, d, xh, e);
		EXPECT_LE((A * e - fd).norm() / e.norm(), 1e-5);
		EXPECT_TRUE(assemble_b(sys, SubsetIndex(6, all), xh, {}).isZero(0.0));
	}
}

TEST(AssembleA, RandomHeadClosedSubsetsMatchOracle)
{
	Rng rng(3);
	for (int trial = 0; trial < 15; ++trial)
		EXPECT_LE(oracle::assembly_oracle_error(rng), 1e-5) << "trial " << trial;
}

TEST(AssembleA, StraddlingEdgeCountsInsideTail)
{
	// tails {0, 1}, head {2}; S = {1, 2}: tail 1 enters A, tail 0 enters b
	DirectedHypergraph h(3);
	h.add_hyperedge({{0, 1}, {2}, {0.25, 0.75}, {1.0}, 2.0});
	auto f = std::make_shared<LinearField>(Mat::Constant(1, 1, -1.0));
	const NetworkSystem sys(h, f, builtin_tanh_coupling(1.0, 0.0, 1.0, 1), std::make_shared<LinearOutput>(LinearOutput::identity(1)));
	const SubsetIndex S(3, {1, 2});
	const Mat A = assemble_A(sys, {}, S, Vec::Zero(3));
	EXPECT_DOUBLE_EQ(A(1, 0), 2.0 * 0.75);
	EXPECT_DOUBLE_EQ(A(1, 1), -1.0 - 2.0);
	ErrorMap out{{0, Vec::Constant(1, 4.0)}};
	EXPECT_DOUBLE_EQ(assemble_b(sys, S, Vec::Zero(3), out)[1], 2.0 * 0.25 * 4.0);
	EXPECT_DOUBLE_EQ(assemble_b(sys, S, Vec::Zero(3), out)[0], 0.0);
}

TEST(AssembleB, ZeroOutsideErrorsGiveZero)
{
	Rng rng(4);
	const auto h = oracle::random_hypergraph(rng, 6, 8, 2);
	const auto sys = oracle::random_system(h, 2);
	const NodeList S = oracle::head_closure(h, {3});
	ErrorMap out;
	for (NodeId v = 0; v < 6; ++v)
		if (std::find(S.begin(), S.end(), v) == S.end())
			out[v] = Vec::Zero(2);
	EXPECT_TRUE(assemble_b(sys, SubsetIndex(6, S), random_state(rng, 12, 2.0), out).isZero(0.0));
}

TEST(AssembleB, MissingOutsideError)
{
	DirectedHypergraph h(3);
	h.add_hyperedge(Hyperedge::uniform({0}, {1}));
	const auto sys = oracle::random_system(h, 1);
	try {
		assemble_b(sys, SubsetIndex(3, {1}), Vec::Zero(3), {});
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::MissingOutsideError);
	}
}

TEST(HeadClosed, Examples)
{
	DirectedHypergraph h(4);
	h.add_hyperedge(Hyperedge::uniform({0}, {1, 2}));
	EXPECT_TRUE(check_head_closed(h, NodeList{0, 1, 2, 3}));
	EXPECT_FALSE(check_head_closed(h, NodeList{1}));
	EXPECT_TRUE(check_head_closed(h, NodeList{0}));
	const auto sys = oracle::random_system(h, 1);
	try {
		assemble_A(sys, {}, SubsetIndex(4, {1}), Vec::Zero(4));
		FAIL();
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::SubsetNotHeadClosed);
	}
	// a settled outside head is accepted
	const NodeList settled{2};
	EXPECT_NO_THROW(assemble_A(sys, {}, SubsetIndex(4, {1}), Vec::Zero(4), settled));
	EXPECT_THROW(assemble_A(sys, {}, SubsetIndex(4, {1}), Vec::Zero(3), settled), Error);
}

TEST(SubsetIndex, RejectsDuplicatesAndRange)
{
	EXPECT_THROW(SubsetIndex(3, {0, 0}), Error);
	EXPECT_THROW(SubsetIndex(3, {3}), Error);
	const SubsetIndex S(5, {4, 1});
	EXPECT_EQ(S.position(1), 1);
	EXPECT_EQ(S.position(0), -1);
}

TEST(AssembleA, NodeOrderingIsSimilarity)
{
	Rng rng(5);
	for (int trial = 0; trial < 10; ++trial) {
		const auto h = oracle::random_hypergraph(rng, 5, 6, 2);
		const auto sys = oracle::random_system(h, 3);
		NodeList S{0, 1, 2, 3, 4}, P = S;
		rng.partial_shuffle(P, P.size());
		const Vec xh = random_state(rng, 15, 10.0);
		const Mat A = assemble_A(sys, {}, SubsetIndex(5, S), xh);
		const Mat B = assemble_A(sys, {}, SubsetIndex(5, P), xh);
		EXPECT_NEAR(lambda_max_sym_value(A), lambda_max_sym_value(B), 1e-9 * std::max(1.0, std::abs(lambda_max_sym_value(A))));
		const std::vector<Mat> a{A}, b{B};
		EXPECT_EQ(check_thm2(a, 1.0).passed, check_thm2(b, 1.0).passed);
	}
}
