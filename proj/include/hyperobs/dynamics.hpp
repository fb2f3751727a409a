#pragma once

#include "hyperobs/errors.hpp"
#include "hyperobs/hypergraph.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hyperobs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// Central-difference Jacobian with per-coordinate step 1e-6*max(1,|x_k|).
template <typename F>
Mat fd_jacobian(F&& fn, const Vec& x, double rel_step = 1e-6)
{
	const Vec f0 = fn(x);
	Mat J(f0.size(), x.size());
	Vec xp = x, xm = x;
	for (Eigen::Index k = 0; k < x.size(); ++k) {
		const double h = rel_step * std::max(1.0, std::abs(x[k]));
		xp[k] = x[k] + h;
		xm[k] = x[k] - h;
		J.col(k) = (fn(xp) - fn(xm)) / (xp[k] - xm[k]);
		xp[k] = xm[k] = x[k];
	}
	return J;
}

// ---------------------------------------------------------------------------
// Node vector fields f(x, mu)

class VectorField {
public:
	virtual ~VectorField() = default;

	virtual std::string name() const = 0;
	virtual std::size_t state_dim() const = 0;
	virtual std::size_t param_dim() const = 0;
	virtual Vec eval(const VecRef& x, const VecRef& mu) const = 0;

	virtual Mat jac_x(const VecRef& x, const VecRef& mu) const
	{
		const Vec m = mu;
		return fd_jacobian([&](const Vec& z) { return eval(z, m); }, x);
	}

	virtual Mat jac_mu(const VecRef& x, const VecRef& mu) const
	{
		const Vec xx = x;
		return fd_jacobian([&](const Vec& m) { return eval(xx, m); }, mu);
	}

	const Vec& nominal_params() const { return nominal_; }

protected:
	explicit VectorField(Vec nominal) : nominal_(std::move(nominal)) {}

private:
	Vec nominal_;
};

class LorenzField final : public VectorField {
public:
	LorenzField(double mu1, double mu2, double mu3) : VectorField(Vec::Map(std::array{mu1, mu2, mu3}.data(), 3)) {}

	std::string name() const override { return "lorenz"; }
	std::size_t state_dim() const override { return 3; }
	std::size_t param_dim() const override { return 3; }

	Vec eval(const VecRef& x, const VecRef& mu) const override
	{
		Vec r(3);
		r << mu[0] * (x[1] - x[0]), x[0] * (mu[1] - x[2]) - x[1], x[0] * x[1] - mu[2] * x[2];
		return r;
	}

	Mat jac_x(const VecRef& x, const VecRef& mu) const override
	{
		Mat J(3, 3);
		J << -mu[0], mu[0], 0.0,
			mu[1] - x[2], -1.0, -x[0],
			x[1], x[0], -mu[2];
		return J;
	}

	Mat jac_mu(const VecRef& x, const VecRef&) const override
	{
		Mat J = Mat::Zero(3, 3);
		J(0, 0) = x[1] - x[0];
		J(1, 1) = x[0];
		J(2, 2) = -x[2];
		return J;
	}
};

/// Scalar bistable field f(x) = -mu1 x + mu2 tanh(x).
class BistableField final : public VectorField {
public:
	BistableField(double mu1, double mu2) : VectorField(Vec::Map(std::array{mu1, mu2}.data(), 2))
	{
		if (!(mu1 > 0.0 && mu2 > 0.0))
			throw Error(ErrorKind::InvalidArgument, "bistable parameters must be positive");
	}

	std::string name() const override { return "bistable"; }
	std::size_t state_dim() const override { return 1; }
	std::size_t param_dim() const override { return 2; }

	Vec eval(const VecRef& x, const VecRef& mu) const override { return Vec::Constant(1, -mu[0] * x[0] + mu[1] * std::tanh(x[0])); }

	Mat jac_x(const VecRef& x, const VecRef& mu) const override
	{
		const double t = std::tanh(x[0]);
		return Mat::Constant(1, 1, -mu[0] + mu[1] * (1.0 - t * t));
	}

	Mat jac_mu(const VecRef& x, const VecRef&) const override
	{
		Mat J(1, 2);
		J << -x[0], std::tanh(x[0]);
		return J;
	}
};

/// Linear field f(x) = M x (parameter-free); handy for tests and examples.
class LinearField final : public VectorField {
public:
	explicit LinearField(Mat m) : VectorField(Vec()), m_(std::move(m)) {}

	std::string name() const override { return "linear"; }
	std::size_t state_dim() const override { return static_cast<std::size_t>(m_.rows()); }
	std::size_t param_dim() const override { return 0; }
	Vec eval(const VecRef& x, const VecRef&) const override { return m_ * x; }
	Mat jac_x(const VecRef&, const VecRef&) const override { return m_; }
	Mat jac_mu(const VecRef&, const VecRef&) const override { return Mat::Zero(m_.rows(), 0); }

private:
	Mat m_;
};

/// User-supplied field; Jacobians fall back to central differences when not given.
class LambdaField final : public VectorField {
public:
	using EvalFn = std::function<Vec(const Vec&, const Vec&)>;
	using JacFn = std::function<Mat(const Vec&, const Vec&)>;

	LambdaField(std::string name, std::size_t n, Vec nominal, EvalFn f, JacFn jx = {}, JacFn jmu = {})
		: VectorField(std::move(nominal))
		, name_(std::move(name))
		, n_(n)
		, f_(std::move(f))
		, jx_(std::move(jx))
		, jmu_(std::move(jmu))
	{
	}

	std::string name() const override { return name_; }
	std::size_t state_dim() const override { return n_; }
	std::size_t param_dim() const override { return static_cast<std::size_t>(nominal_params().size()); }
	Vec eval(const VecRef& x, const VecRef& mu) const override { return f_(x, mu); }
	Mat jac_x(const VecRef& x, const VecRef& mu) const override { return jx_ ? jx_(x, mu) : VectorField::jac_x(x, mu); }
	Mat jac_mu(const VecRef& x, const VecRef& mu) const override { return jmu_ ? jmu_(x, mu) : VectorField::jac_mu(x, mu); }

private:
	std::string name_;
	std::size_t n_;
	EvalFn f_;
	JacFn jx_, jmu_;
};

// ---------------------------------------------------------------------------
// Coupling functions g(z), g(0) = 0

class CouplingFunction {
public:
	virtual ~CouplingFunction() = default;
	virtual std::string name() const = 0;
	virtual std::size_t dim() const = 0;
	virtual Vec eval(const VecRef& z) const = 0;
	virtual Mat jac(const VecRef& z) const
	{
		return fd_jacobian([&](const Vec& v) { return eval(v); }, Vec(z));
	}
};

/**
 * Componentwise g(z)_k = a z_k + b((z_k+c) tanh(z_k+c) - (z_k-c) tanh(z_k-c)).
 * Odd, so g(0) = 0; slope decreases from a + 2b(tanh c + c sech^2 c) at 0
 * towards a at infinity.
 */
class TanhCoupling final : public CouplingFunction {
public:
	TanhCoupling(double a, double b, double c, std::size_t n) : a_(a), b_(b), c_(c), n_(n)
	{
		if (n == 0)
			throw Error(ErrorKind::InvalidArgument, "coupling dimension must be >= 1");
	}

	std::string name() const override { return "tanh"; }
	std::size_t dim() const override { return n_; }

	double scalar(double z) const { return a_ * z + b_ * ((z + c_) * std::tanh(z + c_) - (z - c_) * std::tanh(z - c_)); }

	double scalar_derivative(double z) const
	{
		const double tp = std::tanh(z + c_), tm = std::tanh(z - c_);
		return a_ + b_ * (tp + (z + c_) * (1.0 - tp * tp) - tm - (z - c_) * (1.0 - tm * tm));
	}

	Vec eval(const VecRef& z) const override
	{
		Vec r(z.size());
		for (Eigen::Index k = 0; k < z.size(); ++k)
			r[k] = scalar(z[k]);
		return r;
	}

	Mat jac(const VecRef& z) const override
	{
		Mat J = Mat::Zero(z.size(), z.size());
		for (Eigen::Index k = 0; k < z.size(); ++k)
			J(k, k) = scalar_derivative(z[k]);
		return J;
	}

	double a() const { return a_; }
	double b() const { return b_; }
	double c() const { return c_; }

private:
	double a_, b_, c_;
	std::size_t n_;
};

class LambdaCoupling final : public CouplingFunction {
public:
	using EvalFn = std::function<Vec(const Vec&)>;
	using JacFn = std::function<Mat(const Vec&)>;

	LambdaCoupling(std::string name, std::size_t n, EvalFn g, JacFn jg = {}) : name_(std::move(name)), n_(n), g_(std::move(g)), jg_(std::move(jg)) {}

	std::string name() const override { return name_; }
	std::size_t dim() const override { return n_; }
	Vec eval(const VecRef& z) const override { return g_(z); }
	Mat jac(const VecRef& z) const override { return jg_ ? jg_(z) : CouplingFunction::jac(z); }

private:
	std::string name_;
	std::size_t n_;
	EvalFn g_;
	JacFn jg_;
};

// ---------------------------------------------------------------------------
// Output maps h: R^n -> R^p

class OutputMap {
public:
	virtual ~OutputMap() = default;
	virtual std::size_t state_dim() const = 0;
	virtual std::size_t output_dim() const = 0;
	virtual Vec eval(const VecRef& x) const = 0;
	virtual Mat jac(const VecRef& x) const = 0;
	virtual bool invertible() const { return false; }
	virtual Vec inverse(const VecRef&) const { throw Error(ErrorKind::InvalidArgument, "output map is not invertible"); }
	/// Right gain factor R with jac(x) * R = I for all x; only meaningful
	/// when invertible() and the Jacobian is constant.
	virtual std::optional<Mat> constant_jacobian_inverse() const { return std::nullopt; }
};

/// h(x) = Gamma x. Invertible when square with condition number < 1e8.
class LinearOutput final : public OutputMap {
public:
	static constexpr double max_condition = 1e8;

	explicit LinearOutput(Mat gamma) : gamma_(std::move(gamma))
	{
		if (gamma_.rows() == 0 || gamma_.cols() == 0 || gamma_.rows() > gamma_.cols())
			throw Error(ErrorKind::DimensionMismatch, "output matrix must be p x n with 1 <= p <= n");
		if (gamma_.rows() == gamma_.cols()) {
			Eigen::JacobiSVD<Mat> svd(gamma_);
			const auto& s = svd.singularValues();
			const double smin = s[s.size() - 1];
			if (smin > 0.0 && s[0] / smin < max_condition) {
				inverse_ = gamma_.inverse();
			}
		}
	}

	static LinearOutput identity(std::size_t n) { return LinearOutput(Mat::Identity(n, n)); }

	std::size_t state_dim() const override { return static_cast<std::size_t>(gamma_.cols()); }
	std::size_t output_dim() const override { return static_cast<std::size_t>(gamma_.rows()); }
	Vec eval(const VecRef& x) const override { return gamma_ * x; }
	Mat jac(const VecRef&) const override { return gamma_; }
	bool invertible() const override { return inverse_.has_value(); }

	Vec inverse(const VecRef& y) const override
	{
		if (!inverse_)
			return OutputMap::inverse(y);
		return *inverse_ * y;
	}

	std::optional<Mat> constant_jacobian_inverse() const override { return inverse_; }

	const Mat& matrix() const { return gamma_; }

private:
	Mat gamma_;
	std::optional<Mat> inverse_;
};

// ---------------------------------------------------------------------------
// Observer design data (measured set and correction gains)

/// Correction gains L_ij (n x p), keyed by (i, j) with j measured.
using GainSet = std::map<std::pair<NodeId, NodeId>, Mat>;

struct ObserverDesign {
	NodeList measured; ///< sorted, unique
	GainSet gains;

	bool is_measured(NodeId j) const { return std::binary_search(measured.begin(), measured.end(), j); }
};

// ---------------------------------------------------------------------------
// Network

struct NetworkSystem {
	DirectedHypergraph graph;
	std::shared_ptr<const VectorField> field;
	std::shared_ptr<const CouplingFunction> coupling;
	std::shared_ptr<const OutputMap> output;
	std::vector<Vec> params; ///< per-node parameters, defaults to nominal

	NetworkSystem() = default;

	NetworkSystem(DirectedHypergraph g, std::shared_ptr<const VectorField> f, std::shared_ptr<const CouplingFunction> c, std::shared_ptr<const OutputMap> h)
		: graph(std::move(g))
		, field(std::move(f))
		, coupling(std::move(c))
		, output(std::move(h))
	{
		if (!field || !coupling || !output)
			throw Error(ErrorKind::InvalidArgument, "network needs a field, a coupling and an output map");
		if (coupling->dim() != field->state_dim() || output->state_dim() != field->state_dim())
			throw Error(ErrorKind::DimensionMismatch, "field, coupling and output dimensions disagree");
		params.assign(graph.num_nodes(), field->nominal_params());
	}

	std::size_t num_nodes() const { return graph.num_nodes(); }
	std::size_t n() const { return field->state_dim(); }
	std::size_t p() const { return output->output_dim(); }
	std::size_t total_dim() const { return num_nodes() * n(); }

	const Vec& nominal() const { return field->nominal_params(); }

	auto node(Eigen::VectorXd& x, NodeId i) const { return x.segment(static_cast<Eigen::Index>(i * n()), static_cast<Eigen::Index>(n())); }
	auto node(const Eigen::VectorXd& x, NodeId i) const { return x.segment(static_cast<Eigen::Index>(i * n()), static_cast<Eigen::Index>(n())); }
};

/// x_tail * alpha - x_head * beta for edge e on stacked state x.
inline Vec hyperdiffusive_argument(const NetworkSystem& sys, const Hyperedge& e, const Vec& x)
{
	Vec z = Vec::Zero(static_cast<Eigen::Index>(sys.n()));
	for (std::size_t k = 0; k < e.tails.size(); ++k)
		z += e.alpha[k] * sys.node(x, e.tails[k]);
	for (std::size_t k = 0; k < e.heads.size(); ++k)
		z -= e.beta[k] * sys.node(x, e.heads[k]);
	return z;
}

namespace detail {

inline void check_state(const NetworkSystem& sys, const Vec& x, const char* what)
{
	if (static_cast<std::size_t>(x.size()) != sys.total_dim())
		throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": state length " + std::to_string(x.size()) + " != " + std::to_string(sys.total_dim()));
}

/// Adds the hyperdiffusive coupling of every edge to its heads.
inline void add_coupling(const NetworkSystem& sys, const Vec& x, Vec& out)
{
	for (const auto& e : sys.graph.edges()) {
		const Vec c = e.sigma * sys.coupling->eval(hyperdiffusive_argument(sys, e, x));
		for (NodeId h : e.heads)
			sys.node(out, h) += c;
	}
}

} // namespace detail

/// Network right-hand side with per-node parameters.
inline Vec network_rhs(const NetworkSystem& sys, const Vec& x)
{
	detail::check_state(sys, x, "network_rhs");
	Vec out(x.size());
	for (NodeId i = 0; i < sys.num_nodes(); ++i)
		sys.node(out, i) = sys.field->eval(sys.node(x, i), sys.params[i]);
	detail::add_coupling(sys, x, out);
	return out;
}

/// Measured outputs indexed by node; entries for unmeasured nodes may be empty.
using Measurements = std::vector<Vec>;

/// Observer right-hand side: nominal-parameter prediction plus output
/// injection plus hyperdiffusive coupling on the estimates.
inline Vec observer_rhs(const NetworkSystem& sys, const ObserverDesign& design, const Vec& xhat, const Measurements& y)
{
	detail::check_state(sys, xhat, "observer_rhs");
	if (y.size() != sys.num_nodes())
		throw Error(ErrorKind::DimensionMismatch, "observer_rhs: one measurement slot per node is required");
	Vec out(xhat.size());
	const Vec& mu = sys.nominal();
	for (NodeId i = 0; i < sys.num_nodes(); ++i)
		sys.node(out, i) = sys.field->eval(sys.node(xhat, i), mu);

	std::vector<Vec> innovation(sys.num_nodes());
	for (NodeId j : design.measured) {
		if (static_cast<std::size_t>(y[j].size()) != sys.p())
			throw Error(ErrorKind::MissingMeasurement, "no output for measured node " + std::to_string(j));
		innovation[j] = y[j] - sys.output->eval(sys.node(xhat, j));
	}
	for (const auto& [key, L] : design.gains) {
		const auto [i, j] = key;
		if (innovation[j].size() == 0)
			throw Error(ErrorKind::MissingMeasurement, "gain references unmeasured node " + std::to_string(j));
		sys.node(out, i) += L * innovation[j];
	}
	detail::add_coupling(sys, xhat, out);
	return out;
}

// ---------------------------------------------------------------------------
// Built-in factories

inline std::shared_ptr<const VectorField> builtin_lorenz(double mu1 = 10.0, double mu2 = 28.0, double mu3 = 8.0 / 3.0)
{
	return std::make_shared<LorenzField>(mu1, mu2, mu3);
}

inline std::shared_ptr<const VectorField> builtin_bistable(double mu1 = 1.0, double mu2 = 2.0)
{
	return std::make_shared<BistableField>(mu1, mu2);
}

inline std::shared_ptr<const CouplingFunction> builtin_tanh_coupling(double a, double b, double c, std::size_t n)
{
	return std::make_shared<TanhCoupling>(a, b, c, n);
}

} // namespace hyperobs
