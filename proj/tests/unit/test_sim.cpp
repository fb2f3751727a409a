#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hyperobs;

namespace {

NetworkSystem lorenz_chain()
{
	DirectedHypergraph h(3);
	h.add_hyperedge(Hyperedge::uniform({0}, {1, 2}, 2.0));
	return NetworkSystem(h, builtin_lorenz(), builtin_tanh_coupling(0.2, 0.05, 2.0, 3), std::make_shared<LinearOutput>(LinearOutput::identity(3)));
}

Vec lorenz_state(Rng& rng, std::size_t nodes)
{
	Vec x(static_cast<Eigen::Index>(3 * nodes));
	for (Eigen::Index k = 0; k < x.size(); ++k)
		x[k] = rng.uniform(-5, 5) + (k % 3 == 2 ? 20.0 : 0.0);
	return x;
}

} // namespace

TEST(Settling, ExponentialDecay)
{
	std::vector<double> t, s;
	for (int k = 0; k <= 100000; ++k) {
		t.push_back(k * 1e-4);
		s.push_back(std::exp(-t.back()));
	}
	const auto ts = settling_time(t, s);
	ASSERT_TRUE(ts);
	EXPECT_NEAR(*ts, std::log(20.0), 2e-4);
}

TEST(Settling, ConstantZeroAndRebound)
{
	const std::vector<double> t{0, 1, 2, 3};
	EXPECT_FALSE(settling_time(t, {1, 1, 1, 1}));
	EXPECT_EQ(settling_time(t, {0, 1, 1, 1}), 0.0);
	// dips below 5% but comes back: settles only after the last excursion
	EXPECT_EQ(settling_time(t, {1, 0.01, 0.2, 0.01}), 3.0);
	EXPECT_FALSE(settling_time(t, {1, 0.01, 0.01, 0.2}));
	EXPECT_THROW(settling_time({}, {}), Error);
}

TEST(Integrate, ZeroErrorIsInvariant)
{
	const auto sys = lorenz_chain();
	ObserverDesign d;
	d.measured = {0};
	d.gains[{0, 0}] = 20.0 * Mat::Identity(3, 3);
	Rng rng(1);
	const Vec x0 = lorenz_state(rng, 3);
	SimConfig c;
	c.dt = 1e-3;
	c.horizon = 10.0;
	c.record_stride = 10;
	const auto r = integrate(sys, d, c, x0, x0);
	EXPECT_FALSE(r.diverged);
	EXPECT_LE(r.max_error, 1e-9);
	EXPECT_EQ(r.settling, 0.0);
}

TEST(Integrate, ScalarDecayMatchesClosedForm)
{
	// f = 2x, h = x, L = 5: e' = (2 - L) e
	const NetworkSystem sys(DirectedHypergraph(1), std::make_shared<LinearField>(Mat::Constant(1, 1, 2.0)), builtin_tanh_coupling(0.2, 0.05, 2, 1),
		std::make_shared<LinearOutput>(LinearOutput::identity(1)));
	ObserverDesign d;
	d.measured = {0};
	d.gains[{0, 0}] = Mat::Constant(1, 1, 5.0);
	SimConfig c;
	c.dt = 1e-3;
	c.horizon = 2.0;
	const auto r = integrate(sys, d, c, Vec::Constant(1, 1.0), Vec::Constant(1, 0.5));
	for (std::size_t k = 0; k < r.times.size(); k += 100) {
		const double want = 0.5 * std::exp(-3.0 * r.times[k]);
		EXPECT_NEAR(r.error[k], want, 0.05 * want);
	}
	ASSERT_TRUE(r.settling);
	EXPECT_NEAR(*r.settling, std::log(20.0) / 3.0, 2e-3);
}

TEST(Integrate, NodeNormsComposeTotal)
{
	const auto sys = lorenz_chain();
	Rng rng(2);
	const Vec x0 = lorenz_state(rng, 3);
	SimConfig c;
	c.horizon = 0.5;
	const auto r = integrate(sys, {}, c, x0, perturb_relative(x0, 0.2, rng));
	for (std::size_t k = 0; k < r.times.size(); ++k)
		EXPECT_NEAR(r.error[k] * r.error[k], r.node_error.row(static_cast<Eigen::Index>(k)).squaredNorm(), 1e-10 * std::max(1.0, r.error[k] * r.error[k]));
}

TEST(Integrate, Rk4OrderRatio)
{
	const auto sys = lorenz_chain();
	Rng rng(3);
	const Vec x0 = lorenz_state(rng, 3);
	const double T = 0.5, dt = 0.01;
	const Vec ref = integrate_network(sys, x0, dt / 16.0, T);
	const double e1 = (integrate_network(sys, x0, dt, T) - ref).norm();
	const double e2 = (integrate_network(sys, x0, dt / 2.0, T) - ref).norm();
	const double ratio = e1 / e2;
	EXPECT_GE(ratio, 12.0);
	EXPECT_LE(ratio, 20.0);
}

TEST(Integrate, DivergenceIsFlagged)
{
	const NetworkSystem sys(DirectedHypergraph(1), std::make_shared<LinearField>(Mat::Constant(1, 1, 50.0)), builtin_tanh_coupling(0.2, 0.05, 2, 1),
		std::make_shared<LinearOutput>(LinearOutput::identity(1)));
	SimConfig c;
	c.dt = 1e-2;
	c.horizon = 5.0;
	const auto r = integrate(sys, {}, c, Vec::Ones(1), Vec::Zero(1));
	EXPECT_TRUE(r.diverged);
	EXPECT_FALSE(r.settling);
}

TEST(Integrate, NoiseIsBoundedAndSeeded)
{
	const NetworkSystem sys(DirectedHypergraph(1), std::make_shared<LinearField>(Mat::Constant(1, 1, -1.0)), builtin_tanh_coupling(0.2, 0.05, 2, 1),
		std::make_shared<LinearOutput>(LinearOutput::identity(1)));
	ObserverDesign d;
	d.measured = {0};
	d.gains[{0, 0}] = Mat::Constant(1, 1, 9.0);
	SimConfig c;
	c.dt = 1e-3;
	c.horizon = 3.0;
	c.noise = 0.3;
	const auto a = integrate(sys, d, c, Vec::Zero(1), Vec::Zero(1), 42);
	const auto b = integrate(sys, d, c, Vec::Zero(1), Vec::Zero(1), 42);
	EXPECT_EQ(a.error, b.error);
	// |e| <= L * nu / (1 + L) for the scalar filter e' = -(1 + L) e - L nu
	EXPECT_GT(a.max_error, 0.0);
	EXPECT_LE(a.max_error, 9.0 * 0.3 / 10.0 + 1e-12);
}

TEST(MonteCarlo, SingleRunAndPercentiles)
{
	const auto sys = lorenz_chain();
	ObserverDesign d;
	d.measured = {0};
	d.gains[{0, 0}] = 20.0 * Mat::Identity(3, 3);
	SimConfig c;
	c.horizon = 0.5;
	c.box.lo = Vec::Constant(3, -3.0);
	c.box.hi = Vec::Constant(3, 3.0);
	c.seed = 9;
	const auto one = monte_carlo(sys, d, c, 1);
	EXPECT_EQ(one.median, one.p25);
	EXPECT_EQ(one.median, one.p75);
	const auto many = monte_carlo(sys, d, c, 8);
	for (std::size_t k = 0; k < many.times.size(); ++k) {
		EXPECT_LE(many.p25[k], many.median[k]);
		EXPECT_LE(many.median[k], many.p75[k]);
	}
	const auto threaded = monte_carlo(sys, d, c, 8, 3);
	EXPECT_EQ(threaded.median, many.median);
	EXPECT_EQ(threaded.settling, many.settling);
	EXPECT_THROW(monte_carlo(sys, d, c, 0), Error);
}

TEST(MonteCarlo, IdenticalRunsCoincide)
{
	const auto sys = lorenz_chain();
	SimConfig c;
	c.horizon = 0.3;
	c.box.lo = c.box.hi = Vec::Constant(3, 1.0);
	c.ic_spread = 0.0;
	const auto st = monte_carlo(sys, {}, c, 4);
	EXPECT_EQ(st.p25, st.p75);
}

TEST(Percentile, LinearInterpolation)
{
	EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 0.5), 2.5);
	EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 0.25), 1.75);
	EXPECT_DOUBLE_EQ(percentile({7}, 0.9), 7.0);
	EXPECT_THROW(percentile({}, 0.5), Error);
}

TEST(Trajectories, DeterministicAndSpaced)
{
	const auto sys = lorenz_chain();
	TrajectoryEnsembleSpec t;
	t.count = 3;
	t.horizon = 0.1;
	t.dt = 1e-3;
	t.stride = 5;
	t.box.lo = Vec::Constant(3, -3.0);
	t.box.hi = Vec::Constant(3, 3.0);
	t.seed = 4;
	const auto a = generate_trajectories(sys, t), b = generate_trajectories(sys, t);
	ASSERT_EQ(a.size(), 3u);
	EXPECT_EQ(a[0].states.size(), 21u);
	EXPECT_DOUBLE_EQ(a[0].spacing, 5e-3);
	for (std::size_t r = 0; r < 3; ++r)
		EXPECT_EQ(a[r].states.back(), b[r].states.back());
	EXPECT_NE(a[0].states.front(), a[1].states.front());
	t.count = 0;
	EXPECT_THROW(generate_trajectories(sys, t), Error);
}

TEST(Perturbation, ParameterSpreadWithinBounds)
{
	const auto sys = lorenz_chain();
	Rng rng(5);
	const auto ps = perturbed_params(sys, {0.1, 0.1, 0.1}, rng);
	for (const auto& p : ps)
		for (Eigen::Index k = 0; k < 3; ++k)
			EXPECT_LE(std::abs(p[k] / sys.nominal()[k] - 1.0), 0.1);
	EXPECT_THROW(perturbed_params(sys, {0.1}, rng), Error);
}
