#pragma once

#include "hyperobs/assembly.hpp"
#include "hyperobs/linalg.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hyperobs {

/// Estimator state snapshot taken along a representative trajectory.
struct StateSample {
	Vec state;
	std::size_t trajectory = 0;
	double time = 0.0;
};

enum class Theorem { None, SlowlyVarying, SymmetricPart };

inline const char* to_string(Theorem t)
{
	switch (t) {
	case Theorem::None: return "none";
	case Theorem::SlowlyVarying: return "thm1";
	case Theorem::SymmetricPart: return "thm2";
	}
	return "none";
}

/**
 * Outcome of a hypothesis check over a sample set.
 *
 * worst_value is the largest lambda_max(A_sym) (symmetric-part check) or the
 * largest spectral abscissa (slowly-varying check). h2_margin is the
 * smallest slack of the slow-variation inequality (slowly-varying only).
 */
struct CertificationReport {
	Theorem theorem_used = Theorem::None;
	bool passed = false;
	double required_margin = 0.0;
	double worst_value = std::numeric_limits<double>::quiet_NaN();
	double h2_margin = std::numeric_limits<double>::quiet_NaN();
	double max_coupling_jacobian = std::numeric_limits<double>::quiet_NaN();
	std::size_t sample_count = 0;
	std::vector<std::size_t> trajectory_ids;
	std::string note;

	/// Margin actually achieved (positive when the check passes).
	double achieved_margin() const { return -worst_value; }
};

namespace detail {

inline std::vector<std::size_t> trajectory_ids(std::span<const StateSample> samples)
{
	std::vector<std::size_t> ids;
	for (const auto& s : samples)
		ids.push_back(s.trajectory);
	std::sort(ids.begin(), ids.end());
	ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
	return ids;
}

} // namespace detail

/**
 * Symmetric-part check: passes iff max over samples of lambda_max(A_sym) is
 * <= -margin and the coupling Jacobian bounds are finite.
 */
inline CertificationReport check_thm2(std::span<const Mat> A_samples, double margin, std::span<const double> coupling_norms = {})
{
	if (A_samples.empty())
		throw Error(ErrorKind::EmptySampleSet, "symmetric-part check needs at least one sample");
	if (!(margin > 0.0))
		throw Error(ErrorKind::NonpositiveMargin, "required margin must be positive");
	CertificationReport r;
	r.required_margin = margin;
	r.sample_count = A_samples.size();
	double worst = -std::numeric_limits<double>::infinity();
	for (const Mat& A : A_samples)
		worst = std::max(worst, lambda_max_sym_value(A));
	r.worst_value = worst;
	double g = 0.0;
	bool finite = true;
	for (double c : coupling_norms) {
		finite = finite && std::isfinite(c);
		g = std::max(g, c);
	}
	r.max_coupling_jacobian = coupling_norms.empty() ? 0.0 : g;
	r.passed = finite && std::isfinite(worst) && worst <= -margin;
	if (r.passed)
		r.theorem_used = Theorem::SymmetricPart;
	return r;
}

inline CertificationReport check_thm2(const ErrorSystem& err, std::span<const StateSample> samples, double margin)
{
	if (samples.empty())
		throw Error(ErrorKind::EmptySampleSet, "symmetric-part check needs at least one sample");
	std::vector<Mat> As;
	std::vector<double> gs;
	As.reserve(samples.size());
	for (const auto& s : samples) {
		As.push_back(err.A(s.state));
		gs.push_back(err.coupling_jacobian_norm(s.state));
	}
	auto r = check_thm2(As, margin, gs);
	r.trajectory_ids = detail::trajectory_ids(samples);
	return r;
}

struct SlowVariationOptions {
	double epsilon = 0.1;          ///< in (0, 1)
	std::optional<Mat> Q;          ///< defaults to identity
	std::size_t kronecker_cap = 40; ///< maximum nM
};

/// Right-hand side of the slow-variation inequality for a given A.
inline double slow_variation_bound(const Mat& A, const Mat& Q, double epsilon)
{
	Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
	const double sq = es.eigenvalues()[0];
	const double sk = kronecker_sum_min_singular(A);
	return sq * sk * sk / (2.0 * Q.norm()) * (1.0 - epsilon);
}

/**
 * Slowly-varying check over time-ordered sample sequences (one per
 * trajectory, spacing dt): spectral abscissa <= -margin at every sample,
 * and ||dA/dt|| below the slow-variation bound at every sample that has a
 * successor, dA/dt taken as a forward difference.
 */
inline CertificationReport check_thm1(std::span<const std::vector<Mat>> sequences, double dt, double margin, const SlowVariationOptions& opt = {},
	std::span<const double> coupling_norms = {})
{
	std::size_t count = 0, dim = 0;
	bool has_pair = false;
	for (const auto& seq : sequences) {
		count += seq.size();
		has_pair = has_pair || seq.size() >= 2;
		if (!seq.empty())
			dim = static_cast<std::size_t>(seq.front().rows());
	}
	if (!has_pair)
		throw Error(ErrorKind::EmptySampleSet, "slowly-varying check needs at least two time-ordered samples");
	if (!(margin > 0.0))
		throw Error(ErrorKind::NonpositiveMargin, "required margin must be positive");
	if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0))
		throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
	if (!(dt > 0.0))
		throw Error(ErrorKind::InvalidArgument, "sample spacing must be positive");
	if (dim > opt.kronecker_cap)
		throw Error(ErrorKind::SubsetTooLarge, "nM = " + std::to_string(dim) + " exceeds the Kronecker cap " + std::to_string(opt.kronecker_cap));
	const Mat Q = opt.Q ? *opt.Q : Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
	if (Q.rows() != static_cast<Eigen::Index>(dim) || !is_spd(Q))
		throw Error(ErrorKind::QNotSPD, "Q must be symmetric positive definite and nM x nM");

	CertificationReport r;
	r.required_margin = margin;
	r.sample_count = count;
	double worst = -std::numeric_limits<double>::infinity();
	for (const auto& seq : sequences)
		for (const Mat& A : seq)
			worst = std::max(worst, spectral_abscissa(A));
	r.worst_value = worst;
	if (!(worst <= -margin)) {
		r.note = "abscissa above the required margin";
		return r;
	}

	Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
	const double sq = es.eigenvalues()[0];
	const double qf = Q.norm();
	double slack = std::numeric_limits<double>::infinity();
	for (const auto& seq : sequences) {
		for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
			const double adot = spectral_norm((seq[k + 1] - seq[k]) / dt);
			const double sk = kronecker_sum_min_singular(seq[k]);
			const double bound = sq * sk * sk / (2.0 * qf) * (1.0 - opt.epsilon);
			slack = std::min(slack, bound - adot);
			if (slack <= 0.0)
				break; // reported h2_margin is then the first violation found
		}
		if (slack <= 0.0)
			break;
	}
	r.h2_margin = slack;
	double g = 0.0;
	bool finite = true;
	for (double c : coupling_norms) {
		finite = finite && std::isfinite(c);
		g = std::max(g, c);
	}
	r.max_coupling_jacobian = coupling_norms.empty() ? 0.0 : g;
	r.passed = finite && slack > 0.0;
	if (r.passed)
		r.theorem_used = Theorem::SlowlyVarying;
	else
		r.note = "slow-variation bound violated";
	return r;
}

// ---------------------------------------------------------------------------
// Robustness bound

struct RobustnessInputs {
	double margin = 0.0;              ///< uniform Hurwitz margin of A_sym
	double coupling_bound = 0.0;      ///< bound on ||D_xg||
	double param_jacobian_bound = 0.0; ///< bound on ||D_mu f||
	double gain_norm = 0.0;           ///< ||L_S||
	double mu_bar = 0.0;              ///< parameter deviation bound
	double nu_bar = 0.0;              ///< measurement noise bound
};

struct RobustnessBound {
	double B = 0.0;
	RobustnessInputs inputs;
	std::vector<double> b_bar; ///< per subset node
	std::size_t M = 0;
};

/// B = (sqrt(2) sum b_bar + sqrt(2M) mu_bar f + sqrt(2M) nu_bar l) / (2 h).
inline double robustness_bound_value(const RobustnessInputs& in, std::span<const double> b_bar, std::size_t M)
{
	if (!(in.margin > 0.0))
		throw Error(ErrorKind::NonpositiveMargin, "robustness bound needs a positive Hurwitz margin");
	if (in.coupling_bound < 0.0 || in.param_jacobian_bound < 0.0 || in.gain_norm < 0.0 || in.mu_bar < 0.0 || in.nu_bar < 0.0)
		throw Error(ErrorKind::InvalidArgument, "bounds must be nonnegative");
	double sb = 0.0;
	for (double v : b_bar) {
		if (v < 0.0)
			throw Error(ErrorKind::InvalidArgument, "b_bar terms must be nonnegative");
		sb += v;
	}
	const double s2M = std::sqrt(2.0 * double(M));
	return (std::sqrt(2.0) * sb + s2M * in.mu_bar * in.param_jacobian_bound + s2M * in.nu_bar * in.gain_norm) / (2.0 * in.margin);
}

/**
 * Bound for subset S. For each s_i, b_bar = g * sum over edges entering s_i
 * of sigma * (sum of the upstream bounds B_j of that edge's tails outside S).
 */
inline RobustnessBound thm3_bound(const RobustnessInputs& in, const DirectedHypergraph& h, const SubsetIndex& S, const std::map<NodeId, double>& upstream)
{
	RobustnessBound rb;
	rb.inputs = in;
	rb.M = S.size();
	for (NodeId si : S.nodes()) {
		double acc = 0.0;
		for (EdgeId k : h.incoming(si)) {
			const auto& e = h.edge(k);
			double tails = 0.0;
			for (NodeId t : e.tails) {
				if (S.contains(t))
					continue;
				auto it = upstream.find(t);
				if (it == upstream.end())
					throw Error(ErrorKind::MissingOutsideError, "no upstream bound for tail " + std::to_string(t));
				tails += it->second;
			}
			acc += e.sigma * tails;
		}
		rb.b_bar.push_back(in.coupling_bound * acc);
	}
	rb.B = robustness_bound_value(in, rb.b_bar, rb.M);
	return rb;
}

} // namespace hyperobs
