#pragma once

#include "hyperobs/certify.hpp"
#include "hyperobs/dynamics.hpp"
#include "hyperobs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace hyperobs {

/// One classical fourth-order Runge-Kutta step.
template <typename F>
Vec rk4_step(const F& f, const Vec& z, double dt)
{
	const Vec k1 = f(z);
	const Vec k2 = f(Vec(z + 0.5 * dt * k1));
	const Vec k3 = f(Vec(z + 0.5 * dt * k2));
	const Vec k4 = f(Vec(z + dt * k3));
	return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline std::size_t step_count(double horizon, double dt)
{
	if (!(dt > 0.0) || !(horizon >= dt))
		throw Error(ErrorKind::InvalidArgument, "need dt > 0 and horizon >= dt");
	return static_cast<std::size_t>(std::llround(horizon / dt));
}

/// Plant trajectory only, returning the final state.
inline Vec integrate_network(const NetworkSystem& sys, Vec x, double dt, double horizon)
{
	const std::size_t steps = step_count(horizon, dt);
	auto f = [&](const Vec& z) { return network_rhs(sys, z); };
	for (std::size_t s = 0; s < steps; ++s)
		x = rk4_step(f, x, dt);
	return x;
}

// ---------------------------------------------------------------------------
// Initial conditions

/// Componentwise box for each node's state, optionally followed by a
/// transient run of the nominal network (e.g. to land on an attractor).
struct InitialBox {
	Vec lo, hi;
	double transient = 0.0;
	double transient_dt = 1e-3;
};

inline Vec sample_box(const NetworkSystem& sys, const InitialBox& box, Rng& rng)
{
	const std::size_t n = sys.n();
	if (static_cast<std::size_t>(box.lo.size()) != n || static_cast<std::size_t>(box.hi.size()) != n)
		throw Error(ErrorKind::DimensionMismatch, "initial box must have one interval per state component");
	Vec x(static_cast<Eigen::Index>(sys.total_dim()));
	for (NodeId i = 0; i < sys.num_nodes(); ++i)
		for (std::size_t c = 0; c < n; ++c)
			x[static_cast<Eigen::Index>(i * n + c)] = rng.uniform(box.lo[static_cast<Eigen::Index>(c)], box.hi[static_cast<Eigen::Index>(c)]);
	return x;
}

inline Vec sample_initial_state(const NetworkSystem& sys, const InitialBox& box, Rng& rng)
{
	Vec x = sample_box(sys, box, rng);
	if (box.transient > 0.0) {
		NetworkSystem nominal = sys;
		nominal.params.assign(sys.num_nodes(), sys.nominal());
		x = integrate_network(nominal, x, box.transient_dt, box.transient);
	}
	return x;
}

/// xhat_i(0) = x_i(0) * (1 + U[-w, w]) componentwise.
inline Vec perturb_relative(const Vec& x, double w, Rng& rng)
{
	Vec r = x;
	for (Eigen::Index k = 0; k < x.size(); ++k)
		r[k] *= 1.0 + rng.uniform(-w, w);
	return r;
}

// ---------------------------------------------------------------------------
// Representative trajectories

struct Trajectory {
	std::vector<Vec> states; ///< spaced by `spacing`
	double spacing = 0.0;
};

struct TrajectoryEnsembleSpec {
	std::size_t count = 100;
	double horizon = 2.0;
	double dt = 1e-3;
	std::size_t stride = 5; ///< keep every stride-th integrator step
	InitialBox box;
	std::uint64_t seed = 0;
};

/// Nominal-network trajectories from initial conditions drawn in the box.
inline std::vector<Trajectory> generate_trajectories(const NetworkSystem& sys, const TrajectoryEnsembleSpec& spec)
{
	if (spec.count == 0)
		throw Error(ErrorKind::EmptyTrajectorySet, "trajectory count must be positive");
	const std::size_t steps = step_count(spec.horizon, spec.dt);
	const std::size_t stride = std::max<std::size_t>(spec.stride, 1);
	NetworkSystem nominal = sys;
	nominal.params.assign(sys.num_nodes(), sys.nominal());
	auto f = [&](const Vec& z) { return network_rhs(nominal, z); };
	std::vector<Trajectory> out;
	for (std::size_t r = 0; r < spec.count; ++r) {
		Rng rng(derive_seed(spec.seed, r));
		Vec x = sample_initial_state(nominal, spec.box, rng);
		Trajectory t;
		t.spacing = spec.dt * double(stride);
		t.states.push_back(x);
		for (std::size_t s = 1; s <= steps; ++s) {
			x = rk4_step(f, x, spec.dt);
			if (!x.allFinite())
				break;
			if (s % stride == 0)
				t.states.push_back(x);
		}
		out.push_back(std::move(t));
	}
	return out;
}

inline std::vector<StateSample> flatten(const std::vector<Trajectory>& ts)
{
	std::vector<StateSample> s;
	for (std::size_t r = 0; r < ts.size(); ++r)
		for (std::size_t k = 0; k < ts[r].states.size(); ++k)
			s.push_back({ts[r].states[k], r, double(k) * ts[r].spacing});
	return s;
}

// ---------------------------------------------------------------------------
// Co-simulation

struct SimConfig {
	double dt = 1e-3;
	double horizon = 2.0;
	std::uint64_t seed = 0;
	double noise = 0.0;                    ///< nu_bar, uniform per output channel
	double ic_spread = 0.2;                ///< w in xhat(0) = x(0)(1 + U[-w, w])
	std::vector<double> param_spread;      ///< relative half-width per parameter
	std::size_t record_stride = 1;
	double divergence_threshold = 1e8;
	InitialBox box;                        ///< plant initial conditions
};

struct RunResult {
	std::vector<double> times;
	Mat node_error;                      ///< rows: time points, cols: nodes
	std::vector<double> error;           ///< total norm per time point
	std::optional<double> settling;
	bool diverged = false;
	double max_error = 0.0;
};

/// Smallest grid time after which the series stays at or below
/// fraction * series[0]; 0 when series[0] is 0; nullopt if never.
inline std::optional<double> settling_time(const std::vector<double>& times, const std::vector<double>& series, double fraction = 0.05)
{
	if (series.empty() || times.size() != series.size())
		throw Error(ErrorKind::InvalidArgument, "settling_time needs a nonempty series on a matching grid");
	if (series.front() == 0.0)
		return 0.0;
	const double bound = fraction * series.front();
	std::size_t last = series.size();
	for (std::size_t k = series.size(); k-- > 0;)
		if (!(series[k] <= bound)) {
			last = k;
			break;
		}
	if (last + 1 >= series.size())
		return std::nullopt;
	return times[last + 1];
}

/**
 * RK4 on the stacked (x, xhat) system. The plant uses sys.params; the
 * observer uses nominal parameters and outputs y_j = h(x_j) + nu_j with nu
 * drawn once per step.
 */
inline RunResult integrate(const NetworkSystem& sys, const ObserverDesign& design, const SimConfig& cfg, const Vec& x0, const Vec& xhat0,
	std::uint64_t noise_seed = 0)
{
	detail::check_state(sys, x0, "integrate");
	detail::check_state(sys, xhat0, "integrate");
	const std::size_t steps = step_count(cfg.horizon, cfg.dt);
	const std::size_t stride = std::max<std::size_t>(cfg.record_stride, 1);
	const auto D = static_cast<Eigen::Index>(sys.total_dim());
	const std::size_t N = sys.num_nodes();
	Rng rng(noise_seed);

	Measurements noise(N);
	for (NodeId j : design.measured)
		noise[j] = Vec::Zero(static_cast<Eigen::Index>(sys.p()));
	Measurements y(N);
	auto rhs = [&](const Vec& z) {
		const Vec x = z.head(D), xh = z.tail(D);
		for (NodeId j : design.measured)
			y[j] = sys.output->eval(sys.node(x, j)) + noise[j];
		Vec out(2 * D);
		out.head(D) = network_rhs(sys, x);
		out.tail(D) = observer_rhs(sys, design, xh, y);
		return out;
	};

	RunResult res;
	const std::size_t rows = steps / stride + 1;
	res.node_error = Mat::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(N));
	auto record = [&](double t, const Vec& z) {
		const auto r = static_cast<Eigen::Index>(res.times.size());
		const Vec e = z.head(D) - z.tail(D);
		double tot = 0.0;
		for (NodeId i = 0; i < N; ++i) {
			const double ni = sys.node(e, i).norm();
			res.node_error(r, static_cast<Eigen::Index>(i)) = ni;
			tot += ni * ni;
		}
		res.times.push_back(t);
		res.error.push_back(std::sqrt(tot));
		res.max_error = std::max(res.max_error, res.error.back());
	};

	Vec z(2 * D);
	z << x0, xhat0;
	record(0.0, z);
	for (std::size_t s = 1; s <= steps; ++s) {
		if (cfg.noise > 0.0)
			for (NodeId j : design.measured)
				for (Eigen::Index c = 0; c < noise[j].size(); ++c)
					noise[j][c] = rng.uniform(-cfg.noise, cfg.noise);
		z = rk4_step(rhs, z, cfg.dt);
		if (!z.allFinite() || z.norm() > cfg.divergence_threshold) {
			res.diverged = true;
			break;
		}
		if (s % stride == 0)
			record(double(s) * cfg.dt, z);
	}
	res.node_error.conservativeResize(static_cast<Eigen::Index>(res.times.size()), Eigen::NoChange);
	if (!res.diverged)
		res.settling = settling_time(res.times, res.error);
	return res;
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
inline double percentile(std::vector<double> v, double q)
{
	if (v.empty())
		throw Error(ErrorKind::InvalidArgument, "percentile of an empty set");
	std::sort(v.begin(), v.end());
	const double pos = q * double(v.size() - 1);
	const auto lo = static_cast<std::size_t>(std::floor(pos));
	const std::size_t hi = std::min(lo + 1, v.size() - 1);
	return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

struct EnsembleStats {
	std::vector<double> times;
	std::vector<double> median, p25, p75;
	std::vector<std::optional<double>> settling; ///< per run
	std::vector<char> diverged;                  ///< per run
	std::vector<double> max_error;               ///< per run

	std::size_t runs() const { return settling.size(); }
	std::size_t diverged_count() const { return static_cast<std::size_t>(std::count(diverged.begin(), diverged.end(), 1)); }
	std::size_t settled_count() const
	{
		return static_cast<std::size_t>(std::count_if(settling.begin(), settling.end(), [](const auto& s) { return s.has_value(); }));
	}
	double max_error_overall() const { return max_error.empty() ? 0.0 : *std::max_element(max_error.begin(), max_error.end()); }
};

/// Plant parameters mu_i = nominal * (1 + U[-s_k, s_k]) per node and parameter.
inline std::vector<Vec> perturbed_params(const NetworkSystem& sys, const std::vector<double>& spread, Rng& rng)
{
	std::vector<Vec> ps(sys.num_nodes(), sys.nominal());
	if (spread.empty())
		return ps;
	if (spread.size() != static_cast<std::size_t>(sys.nominal().size()))
		throw Error(ErrorKind::DimensionMismatch, "parameter spread needs one entry per parameter");
	for (auto& mu : ps)
		for (Eigen::Index k = 0; k < mu.size(); ++k)
			mu[k] *= 1.0 + rng.uniform(-spread[static_cast<std::size_t>(k)], spread[static_cast<std::size_t>(k)]);
	return ps;
}

/// Run r with its own derived seed: plant ICs, parameter draw, observer ICs
/// and the noise stream all come from derive_seed(cfg.seed, r).
inline RunResult monte_carlo_run(const NetworkSystem& sys, const ObserverDesign& design, const SimConfig& cfg, std::size_t r)
{
	Rng rng(derive_seed(cfg.seed, r));
	const Vec x0 = sample_initial_state(sys, cfg.box, rng);
	NetworkSystem plant = sys;
	plant.params = perturbed_params(sys, cfg.param_spread, rng);
	const Vec xh0 = perturb_relative(x0, cfg.ic_spread, rng);
	return integrate(plant, design, cfg, x0, xh0, rng.next());
}

inline EnsembleStats summarize(const std::vector<RunResult>& runs)
{
	EnsembleStats st;
	std::size_t len = std::numeric_limits<std::size_t>::max();
	for (const auto& r : runs) {
		st.settling.push_back(r.settling);
		st.diverged.push_back(r.diverged ? 1 : 0);
		st.max_error.push_back(r.diverged ? std::numeric_limits<double>::infinity() : r.max_error);
		if (!r.diverged)
			len = std::min(len, r.times.size());
	}
	if (len == std::numeric_limits<std::size_t>::max())
		return st;
	const RunResult* ref = nullptr;
	for (const auto& r : runs)
		if (!r.diverged) {
			ref = &r;
			break;
		}
	std::vector<double> col;
	for (std::size_t k = 0; k < len; ++k) {
		col.clear();
		for (const auto& r : runs)
			if (!r.diverged)
				col.push_back(r.error[k]);
		st.times.push_back(ref->times[k]);
		st.median.push_back(percentile(col, 0.5));
		st.p25.push_back(percentile(col, 0.25));
		st.p75.push_back(percentile(col, 0.75));
	}
	return st;
}

/// Independent runs across `jobs` worker threads; reduction is by run index,
/// so results do not depend on the worker count.
inline EnsembleStats monte_carlo(const NetworkSystem& sys, const ObserverDesign& design, const SimConfig& cfg, std::size_t n_runs, std::size_t jobs = 1)
{
	if (n_runs == 0)
		throw Error(ErrorKind::InvalidArgument, "monte_carlo needs at least one run");
	std::vector<RunResult> runs(n_runs);
	jobs = std::clamp<std::size_t>(jobs, 1, n_runs);
	if (jobs == 1) {
		for (std::size_t r = 0; r < n_runs; ++r)
			runs[r] = monte_carlo_run(sys, design, cfg, r);
	} else {
		std::vector<std::thread> pool;
		std::vector<std::exception_ptr> errors(jobs);
		for (std::size_t w = 0; w < jobs; ++w)
			pool.emplace_back([&, w] {
				try {
					for (std::size_t r = w; r < n_runs; r += jobs)
						runs[r] = monte_carlo_run(sys, design, cfg, r);
				} catch (...) {
					errors[w] = std::current_exception();
				}
			});
		for (auto& t : pool)
			t.join();
		for (auto& e : errors)
			if (e)
				std::rethrow_exception(e);
	}
	return summarize(runs);
}

} // namespace hyperobs
