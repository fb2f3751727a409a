#pragma once

#include "hyperobs/assembly.hpp"
#include "hyperobs/certify.hpp"
#include "hyperobs/linalg.hpp"
#include "hyperobs/rng.hpp"

#include <algorithm>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace hyperobs {

/// Max spectral abscissa over the given D_xf samples, floored at `floor`.
inline double estimate_network_rate(std::span<const Mat> jacobians, double floor = 0.1)
{
	if (jacobians.empty())
		throw Error(ErrorKind::EmptySampleSet, "network rate needs at least one Jacobian sample");
	double r = -std::numeric_limits<double>::infinity();
	for (const Mat& J : jacobians)
		r = std::max(r, spectral_abscissa(J));
	return std::max(r, floor);
}

/// Network rate from estimator samples: D_xf of every node at every
/// `stride`-th sample, nominal parameters.
inline double estimate_network_rate(const NetworkSystem& sys, std::span<const StateSample> samples, std::size_t stride = 1, double floor = 0.1)
{
	if (samples.empty())
		throw Error(ErrorKind::EmptySampleSet, "network rate needs at least one sample");
	std::vector<Mat> J;
	for (std::size_t k = 0; k < samples.size(); k += std::max<std::size_t>(stride, 1))
		for (NodeId i = 0; i < sys.num_nodes(); ++i)
			J.push_back(sys.field->jac_x(sys.node(samples[k].state, i), sys.nominal()));
	return estimate_network_rate(J, floor);
}

/**
 * A_S over a sample set as an affine function of the stacked gain
 * L (nM x pK): A_k(L) = A0_k - L C_k. Column block k of L is the gain column
 * of the k-th measured node of S; row block i belongs to s_i.
 *
 * A0_k and C_k are assembled on demand from the stored estimator states.
 */
class AffineFamily {
public:
	AffineFamily(const NetworkSystem& sys, const ObserverDesign& base, SubsetIndex S, NodeList measured_in_S, std::vector<Vec> states, NodeList settled = {})
		: sys_(&sys)
		, base_(base)
		, S_(std::move(S))
		, measured_(std::move(measured_in_S))
		, states_(std::move(states))
		, settled_(std::move(settled))
	{
		if (states_.empty())
			throw Error(ErrorKind::EmptySampleSet, "gain design needs at least one sample");
		std::erase_if(base_.gains, [&](const auto& kv) { return S_.contains(kv.first.first); });
		if (sys.output->constant_jacobian_inverse() || dynamic_cast<const LinearOutput*>(sys.output.get()))
			C_const_ = assemble_sensing(sys, S_, measured_, states_.front());
	}

	/// Explicit matrices, for tests and small problems.
	AffineFamily(std::vector<Mat> A0, std::vector<Mat> C, std::size_t n, std::size_t p, std::size_t M, std::size_t K)
		: A0_(std::move(A0)), Cs_(std::move(C)), n_(n), p_(p), M_(M), K_(K)
	{
		if (A0_.empty() || A0_.size() != Cs_.size())
			throw Error(ErrorKind::EmptySampleSet, "affine family needs matching nonempty A0 and C lists");
	}

	std::size_t size() const { return sys_ ? states_.size() : A0_.size(); }
	std::size_t n() const { return sys_ ? sys_->n() : n_; }
	std::size_t p() const { return sys_ ? sys_->p() : p_; }
	std::size_t M() const { return sys_ ? S_.size() : M_; }
	std::size_t K() const { return sys_ ? measured_.size() : K_; }
	Eigen::Index rows() const { return static_cast<Eigen::Index>(n() * M()); }
	Eigen::Index cols() const { return static_cast<Eigen::Index>(p() * K()); }

	const SubsetIndex& subset() const { return S_; }
	const NodeList& measured() const { return measured_; }
	const std::vector<Vec>& states() const { return states_; }

	Mat A0(std::size_t k) const
	{
		if (!sys_)
			return A0_.at(k);
		return assemble_A(*sys_, base_, S_, states_.at(k), settled_);
	}

	Mat C(std::size_t k) const
	{
		if (!sys_)
			return Cs_.at(k);
		if (C_const_)
			return *C_const_;
		return assemble_sensing(*sys_, S_, measured_, states_.at(k));
	}

	Mat A(std::size_t k, const Mat& L) const
	{
		if (K() == 0)
			return A0(k);
		return A0(k) - L * C(k);
	}

	Mat zero_gain() const { return Mat::Zero(rows(), cols()); }

	/// Split a stacked gain into L_{s_i m_k} blocks, dropping zero blocks.
	/// Explicit families use block positions as node ids.
	GainSet to_gains(const Mat& L) const
	{
		GainSet g;
		const auto ni = static_cast<Eigen::Index>(n()), pi = static_cast<Eigen::Index>(p());
		for (std::size_t i = 0; i < M(); ++i)
			for (std::size_t k = 0; k < K(); ++k) {
				Mat blk = L.block(static_cast<Eigen::Index>(i) * ni, static_cast<Eigen::Index>(k) * pi, ni, pi);
				if (!blk.isZero(0.0))
					g[{sys_ ? S_.nodes()[i] : i, sys_ ? measured_[k] : k}] = blk;
			}
		return g;
	}

private:
	const NetworkSystem* sys_ = nullptr;
	ObserverDesign base_;
	SubsetIndex S_;
	NodeList measured_;
	std::vector<Vec> states_;
	NodeList settled_;
	std::optional<Mat> C_const_;

	std::vector<Mat> A0_, Cs_;
	std::size_t n_ = 0, p_ = 0, M_ = 0, K_ = 0;
};

/// phi(L) restricted to one sample: lambda_max(sym(A_k(L))).
inline double sample_phi(const AffineFamily& fam, std::size_t k, const Mat& L) { return lambda_max_sym_value(fam.A(k, L)); }

/// Subgradient of lambda_max(sym(A0 - L C)) with respect to L: -u (C u)^T.
inline Mat sample_subgradient(const AffineFamily& fam, std::size_t k, const Mat& L)
{
	const TopEigen top = lambda_max_sym(fam.A(k, L));
	return -top.vector * (fam.C(k) * top.vector).transpose();
}

struct PhiValue {
	double value = -std::numeric_limits<double>::infinity();
	std::size_t argmax = 0;
};

inline PhiValue phi(const AffineFamily& fam, const Mat& L, std::span<const std::size_t> which = {})
{
	PhiValue r;
	auto visit = [&](std::size_t k) {
		const double v = sample_phi(fam, k, L);
		if (v > r.value) {
			r.value = v;
			r.argmax = k;
		}
	};
	if (which.empty())
		for (std::size_t k = 0; k < fam.size(); ++k)
			visit(k);
	else
		for (std::size_t k : which)
			visit(k);
	return r;
}

struct GainDesignOptions {
	std::size_t max_iters = 5000;
	std::size_t restarts = 3;
	double rho = 10.0;
	double network_rate = 0.1;   ///< scale of random restarts and of the spectrum template
	double polyak_overshoot = 0.25; ///< Polyak target is -(1 + overshoot) * margin
	std::size_t working_set = 64;
	std::size_t working_set_growth = 32;
	std::uint64_t seed = 0;
	// slowly-varying route
	double epsilon = 0.1;
	std::size_t kronecker_cap = 40;
	double spectrum_weight = 0.01;
	std::optional<std::vector<std::complex<double>>> spectrum; ///< overrides the default template
};

struct GainDesignResult {
	GainSet gains;
	Mat L;                       ///< stacked nM x pK gain
	double objective = 0.0;      ///< final phi or psi value
	std::size_t iterations = 0;
	std::size_t restarts_used = 0;
	Theorem route = Theorem::None;
};

namespace detail {

inline double margin_tolerance(double margin) { return 1e-9 * std::max(1.0, margin); }

inline std::vector<std::size_t> worst_samples(const std::vector<double>& vals, std::size_t count, double above)
{
	std::vector<std::size_t> idx;
	for (std::size_t k = 0; k < vals.size(); ++k)
		if (vals[k] > above)
			idx.push_back(k);
	const std::size_t c = std::min(count, idx.size());
	std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(c), idx.end(), [&](std::size_t a, std::size_t b) {
		return vals[a] > vals[b] || (vals[a] == vals[b] && a < b);
	});
	idx.resize(c);
	return idx;
}

inline std::vector<double> all_phi(const AffineFamily& fam, const Mat& L)
{
	std::vector<double> v(fam.size());
	for (std::size_t k = 0; k < fam.size(); ++k)
		v[k] = sample_phi(fam, k, L);
	return v;
}

} // namespace detail

/**
 * Lower bound on min over L of phi(L): directions u with C_k u = 0 are
 * untouched by the gain, so phi(L) >= max_k lambda_max(N_k^T sym(A0_k) N_k)
 * with N_k an orthonormal basis of ker C_k. -inf when every kernel is trivial.
 */
inline double phi_lower_bound(const AffineFamily& fam)
{
	double lb = -std::numeric_limits<double>::infinity();
	Mat lastC, N;
	for (std::size_t k = 0; k < fam.size(); ++k) {
		const Mat C = fam.C(k);
		if (k == 0 || C.rows() != lastC.rows() || C.cols() != lastC.cols() || C != lastC) {
			if (C.rows() == 0) {
				N = Mat::Identity(fam.rows(), fam.rows());
			} else {
				Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
				const Eigen::Index r = svd.rank();
				N = svd.matrixV().rightCols(C.cols() - r);
			}
			lastC = C;
		}
		if (N.cols() == 0)
			continue;
		lb = std::max(lb, lambda_max_sym_value(N.transpose() * fam.A0(k) * N));
	}
	return lb;
}

/**
 * Static gain with max over samples of lambda_max(sym(A_k(L))) <= -margin,
 * by Polyak-step subgradient descent from L = 0 on a working set of the
 * worst samples, grown with violators until the full sample set certifies.
 * Throws Infeasible or NoMeasuredNodes.
 */
inline GainDesignResult design_gain_thm2(const AffineFamily& fam, double margin, const GainDesignOptions& opt = {})
{
	if (!(margin > 0.0))
		throw Error(ErrorKind::NonpositiveMargin, "required margin must be positive");
	const double goal = -margin - detail::margin_tolerance(margin);
	const double target = -(1.0 + opt.polyak_overshoot) * margin;

	GainDesignResult res;
	res.route = Theorem::SymmetricPart;
	res.L = fam.zero_gain();
	auto vals = detail::all_phi(fam, res.L);
	double worst = *std::max_element(vals.begin(), vals.end());
	if (worst <= goal) {
		res.objective = worst;
		return res;
	}
	if (fam.K() == 0)
		throw Error(ErrorKind::NoMeasuredNodes, "subset has no measured node and does not certify with zero gain");
	if (const double lb = phi_lower_bound(fam); lb > goal)
		throw Error(ErrorKind::Infeasible, "the unsensed directions alone reach " + std::to_string(lb) + " above the required margin");

	Rng rng(opt.seed);
	double best = worst;
	for (std::size_t attempt = 0; attempt <= opt.restarts; ++attempt) {
		Mat L = fam.zero_gain();
		if (attempt > 0) {
			for (Eigen::Index r = 0; r < L.rows(); ++r)
				for (Eigen::Index c = 0; c < L.cols(); ++c)
					L(r, c) = rng.normal() * opt.network_rate;
			vals = detail::all_phi(fam, L);
		}
		std::vector<std::size_t> W = detail::worst_samples(vals, opt.working_set, -std::numeric_limits<double>::infinity());
		std::size_t it = 0;
		bool ok = false;
		while (it < opt.max_iters) {
			// descend on the working set
			bool stuck = false;
			for (; it < opt.max_iters; ++it) {
				const PhiValue pv = phi(fam, L, W);
				if (pv.value <= goal)
					break;
				const Mat G = sample_subgradient(fam, pv.argmax, L);
				const double g2 = G.squaredNorm();
				if (g2 <= 1e-300) {
					stuck = true;
					break;
				}
				L -= ((pv.value - target) / g2) * G;
			}
			if (stuck || it >= opt.max_iters)
				break;
			vals = detail::all_phi(fam, L);
			worst = *std::max_element(vals.begin(), vals.end());
			best = std::min(best, worst);
			if (worst <= goal) {
				ok = true;
				break;
			}
			auto extra = detail::worst_samples(vals, opt.working_set_growth, goal);
			for (std::size_t k : extra)
				if (std::find(W.begin(), W.end(), k) == W.end())
					W.push_back(k);
		}
		res.iterations += it;
		if (ok) {
			res.L = L;
			res.objective = worst;
			res.restarts_used = attempt;
			res.gains = fam.to_gains(L);
			return res;
		}
	}
	throw Error(ErrorKind::Infeasible, "no static gain reaches the required symmetric-part margin (best " + std::to_string(best) + ")");
}

// ---------------------------------------------------------------------------
// Slowly-varying route

/// Default spectrum template: nM distinct reals starting at -rho * rate.
inline std::vector<std::complex<double>> default_spectrum(std::size_t dim, double rho, double rate)
{
	std::vector<std::complex<double>> s;
	const double base = rho * rate;
	for (std::size_t k = 0; k < dim; ++k)
		s.emplace_back(-base * (1.0 + 0.1 * double(k)), 0.0);
	return s;
}

inline double max_real(const std::vector<std::complex<double>>& s)
{
	double r = -std::numeric_limits<double>::infinity();
	for (const auto& z : s)
		r = std::max(r, z.real());
	return r;
}

/// Sum of distances between eigenvalues of A and the template, both sorted
/// by (real, imag).
inline double spectrum_mismatch(const Mat& A, std::vector<std::complex<double>> target)
{
	const auto ev = eigenvalues(A);
	std::vector<std::complex<double>> s(ev.data(), ev.data() + ev.size());
	if (s.size() != target.size())
		return 0.0;
	auto less = [](const std::complex<double>& a, const std::complex<double>& b) {
		return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
	};
	std::sort(s.begin(), s.end(), less);
	std::sort(target.begin(), target.end(), less);
	double d = 0.0;
	for (std::size_t k = 0; k < s.size(); ++k)
		d += std::abs(s[k] - target[k]);
	return d;
}

struct NelderMeadResult {
	Vec x;
	double value = 0.0;
	std::size_t evaluations = 0;
};

/// Plain Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
inline NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, double step, std::size_t max_evals, double stop_below,
	double ftol = 1e-12)
{
	const Eigen::Index d = x0.size();
	std::vector<Vec> pts(static_cast<std::size_t>(d + 1), x0);
	std::vector<double> fv(static_cast<std::size_t>(d + 1));
	std::size_t evals = 0;
	auto eval = [&](const Vec& x) {
		++evals;
		return f(x);
	};
	for (Eigen::Index i = 0; i < d; ++i)
		pts[static_cast<std::size_t>(i + 1)][i] += step;
	for (std::size_t i = 0; i < pts.size(); ++i)
		fv[i] = eval(pts[i]);
	std::vector<std::size_t> order(pts.size());
	while (true) {
		std::iota(order.begin(), order.end(), 0);
		std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
		const std::size_t lo = order.front(), hi = order.back(), nh = order[order.size() - 2];
		if (fv[lo] <= stop_below || evals >= max_evals || std::abs(fv[hi] - fv[lo]) <= ftol * (std::abs(fv[lo]) + 1e-300))
			return {pts[lo], fv[lo], evals};
		Vec c = Vec::Zero(d);
		for (std::size_t i = 0; i < pts.size(); ++i)
			if (i != hi)
				c += pts[i];
		c /= double(d);
		const Vec xr = c + (c - pts[hi]);
		const double fr = eval(xr);
		if (fr < fv[lo]) {
			const Vec xe = c + 2.0 * (c - pts[hi]);
			const double fe = eval(xe);
			if (fe < fr) {
				pts[hi] = xe;
				fv[hi] = fe;
			} else {
				pts[hi] = xr;
				fv[hi] = fr;
			}
		} else if (fr < fv[nh]) {
			pts[hi] = xr;
			fv[hi] = fr;
		} else {
			const bool outside = fr < fv[hi];
			const Vec xc = outside ? Vec(c + 0.5 * (xr - c)) : Vec(c + 0.5 * (pts[hi] - c));
			const double fc = eval(xc);
			if (fc < (outside ? fr : fv[hi])) {
				pts[hi] = xc;
				fv[hi] = fc;
			} else {
				for (std::size_t i = 0; i < pts.size(); ++i) {
					if (i == lo)
						continue;
					pts[i] = pts[lo] + 0.5 * (pts[i] - pts[lo]);
					fv[i] = eval(pts[i]);
				}
			}
		}
	}
}

/**
 * Gain-independent obstruction to the slow-variation bound with Q = I. For
 * unit u in ker C_k, (A (+) A)(u (x) u) = (A0 u) (x) u + u (x) (A0 u), so
 * sigma_min(A (+) A) <= 2 sigma_min(A0_k N_k); where C_k = C_k+1 the rate
 * dA/dt does not depend on L either. Returns ||dA/dt|| - upper bound,
 * maximised over such pairs until the first nonnegative one; >= 0 means no
 * gain can satisfy H2.
 */
inline double slow_variation_obstruction(const AffineFamily& fam, const std::vector<std::vector<std::size_t>>& sequences, double dt, double epsilon)
{
	double worst = -std::numeric_limits<double>::infinity();
	const double qf = std::sqrt(double(fam.rows()));
	Mat lastC, N;
	bool have = false;
	for (const auto& seq : sequences) {
		for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
			const std::size_t k = seq[i], k1 = seq[i + 1];
			const Mat C = fam.C(k);
			if (C.rows() != 0 && (fam.C(k1) - C).norm() != 0.0)
				continue;
			if (!have || C.rows() != lastC.rows() || C.cols() != lastC.cols() || C != lastC) {
				if (C.rows() == 0) {
					N = Mat::Identity(fam.rows(), fam.rows());
				} else {
					Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
					N = svd.matrixV().rightCols(C.cols() - svd.rank());
				}
				lastC = C;
				have = true;
			}
			if (N.cols() == 0)
				return worst;
			const double s = 2.0 * smallest_singular_value(fam.A0(k) * N);
			const double ub = s * s / (2.0 * qf) * (1.0 - epsilon);
			const double adot = spectral_norm((fam.A0(k1) - fam.A0(k)) / dt);
			worst = std::max(worst, adot - ub);
			if (worst >= 0.0)
				return worst;
		}
	}
	return worst;
}

/**
 * Static gain placing the spectrum of A_S below the template's dominant real
 * part at every sample, matching the template at the mean-Jacobian sample.
 * Nelder-Mead on psi(L) = max_k (abscissa(A_k(L)) - max Re template)_+ +
 * w * mismatch(mean sample). When the sensing matrix has full column rank the
 * search starts from exact placement at the mean sample, otherwise from
 * `warm_start` (or zero).
 *
 * Success additionally requires the slow-variation check on `sequences`
 * (index lists into the family's samples, time-ordered with spacing dt).
 * Throws Infeasible.
 */
inline GainDesignResult design_gain_thm1(const AffineFamily& fam, double margin, const std::vector<std::vector<std::size_t>>& sequences, double dt,
	const GainDesignOptions& opt = {}, const std::optional<Mat>& warm_start = std::nullopt)
{
	if (!(margin > 0.0))
		throw Error(ErrorKind::NonpositiveMargin, "required margin must be positive");
	const std::size_t dim = static_cast<std::size_t>(fam.rows());
	if (dim > opt.kronecker_cap)
		throw Error(ErrorKind::SubsetTooLarge, "nM = " + std::to_string(dim) + " exceeds the Kronecker cap");
	const auto spectrum = opt.spectrum ? *opt.spectrum : default_spectrum(dim, opt.rho, opt.network_rate);
	const double ceiling = std::min(max_real(spectrum), -margin);

	// mean sample: the sample whose A0 is closest to the mean A0
	Mat mean = Mat::Zero(fam.rows(), fam.rows());
	for (std::size_t k = 0; k < fam.size(); ++k)
		mean += fam.A0(k);
	mean /= double(fam.size());
	std::size_t kmean = 0;
	double dbest = std::numeric_limits<double>::infinity();
	for (std::size_t k = 0; k < fam.size(); ++k) {
		const double dd = (fam.A0(k) - mean).norm();
		if (dd < dbest) {
			dbest = dd;
			kmean = k;
		}
	}

	const std::size_t rows = static_cast<std::size_t>(fam.rows()), cols = static_cast<std::size_t>(fam.cols());
	auto unpack = [&](const Vec& v) { return Mat(Eigen::Map<const Mat>(v.data(), fam.rows(), fam.cols())); };

	std::vector<std::size_t> all(fam.size());
	std::iota(all.begin(), all.end(), 0);

	auto certify = [&](const Mat& L) -> std::optional<double> {
		std::vector<std::vector<Mat>> seqs;
		for (const auto& s : sequences) {
			std::vector<Mat> As;
			for (std::size_t k : s)
				As.push_back(fam.A(k, L));
			seqs.push_back(std::move(As));
		}
		SlowVariationOptions so;
		so.epsilon = opt.epsilon;
		so.kronecker_cap = opt.kronecker_cap;
		const auto r = check_thm1(seqs, dt, margin, so);
		if (r.passed)
			return r.h2_margin;
		return std::nullopt;
	};

	auto abscissa_excess = [&](const Mat& L, std::span<const std::size_t> which) {
		double e = 0.0;
		for (std::size_t k : which)
			e = std::max(e, spectral_abscissa(fam.A(k, L)) - ceiling);
		return e;
	};

	Mat L0 = warm_start ? *warm_start : fam.zero_gain();
	if (fam.K() > 0) {
		const Mat Cm = fam.C(kmean);
		Eigen::JacobiSVD<Mat> svd(Cm);
		if (Cm.cols() > 0 && static_cast<std::size_t>(svd.rank()) == rows && spectrum.size() == dim) {
			bool real = std::all_of(spectrum.begin(), spectrum.end(), [](const auto& z) { return z.imag() == 0.0; });
			if (real) {
				Mat target = Mat::Zero(fam.rows(), fam.rows());
				for (std::size_t k = 0; k < dim; ++k)
					target(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = spectrum[k].real();
				// C has full column rank, so pinv(C) C = I and A0 - L C = target
				L0 = (fam.A0(kmean) - target) * Cm.completeOrthogonalDecomposition().pseudoInverse();
			}
		}
	}

	if (const double gap = slow_variation_obstruction(fam, sequences, dt, opt.epsilon); gap >= 0.0)
		throw Error(ErrorKind::Infeasible, "the unsensed directions violate the slow-variation bound for every gain (excess " + std::to_string(gap) + ")");

	GainDesignResult res;
	res.route = Theorem::SlowlyVarying;

	// zero or warm gain may already be enough
	if (abscissa_excess(L0, all) == 0.0) {
		if (auto m = certify(L0)) {
			res.L = L0;
			res.gains = fam.to_gains(L0);
			res.objective = 0.0;
			return res;
		}
	}
	if (fam.K() == 0)
		throw Error(ErrorKind::Infeasible, "no measured node and the zero gain does not certify");

	std::vector<std::size_t> W = detail::worst_samples(
		[&] {
			std::vector<double> v(fam.size());
			for (std::size_t k = 0; k < fam.size(); ++k)
				v[k] = spectral_abscissa(fam.A(k, L0));
			return v;
		}(),
		opt.working_set, -std::numeric_limits<double>::infinity());
	if (std::find(W.begin(), W.end(), kmean) == W.end())
		W.push_back(kmean);

	Vec x = Eigen::Map<const Vec>(L0.data(), static_cast<Eigen::Index>(rows * cols));
	const double step = std::max(1.0, opt.rho * opt.network_rate) * 0.5;
	std::size_t evals = 0;
	for (std::size_t round = 0; round <= opt.restarts + 4 && evals < opt.max_iters * 4; ++round) {
		auto psi = [&](const Vec& v) {
			const Mat L = unpack(v);
			double e = abscissa_excess(L, W);
			if (opt.spectrum_weight > 0.0)
				e += opt.spectrum_weight * spectrum_mismatch(fam.A(kmean, L), spectrum) / double(dim);
			return e;
		};
		const auto nm = nelder_mead(psi, x, step, opt.max_iters, -1.0);
		evals += nm.evaluations;
		x = nm.x;
		const Mat L = unpack(x);
		if (abscissa_excess(L, W) > 0.0)
			continue;
		std::vector<double> v(fam.size());
		for (std::size_t k = 0; k < fam.size(); ++k)
			v[k] = spectral_abscissa(fam.A(k, L));
		auto viol = detail::worst_samples(v, opt.working_set_growth, ceiling);
		if (viol.empty()) {
			if (certify(L)) {
				res.L = L;
				res.gains = fam.to_gains(L);
				res.objective = nm.value;
				res.iterations = evals;
				return res;
			}
			break;
		}
		for (std::size_t k : viol)
			W.push_back(k);
	}
	throw Error(ErrorKind::Infeasible, "spectrum-placement search did not certify the slowly-varying hypotheses");
}

} // namespace hyperobs
