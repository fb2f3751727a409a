#pragma once

#include "hyperobs/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

namespace hyperobs {

inline Mat sym_part(const Mat& A) { return 0.5 * (A + A.transpose()); }

struct TopEigen {
	double value;
	Vec vector; ///< unit norm
};

/// Largest eigenvalue of the symmetric part of A and its eigenvector.
inline TopEigen lambda_max_sym(const Mat& A)
{
	Eigen::SelfAdjointEigenSolver<Mat> es(sym_part(A));
	const Eigen::Index last = A.rows() - 1;
	return {es.eigenvalues()[last], es.eigenvectors().col(last)};
}

inline double lambda_max_sym_value(const Mat& A)
{
	Eigen::SelfAdjointEigenSolver<Mat> es(sym_part(A), Eigen::EigenvaluesOnly);
	return es.eigenvalues()[A.rows() - 1];
}

inline Eigen::VectorXcd eigenvalues(const Mat& A)
{
	Eigen::EigenSolver<Mat> es(A, false);
	return es.eigenvalues();
}

/// Maximum real part of the eigenvalues.
inline double spectral_abscissa(const Mat& A)
{
	if (A.rows() == 1)
		return A(0, 0);
	return eigenvalues(A).real().maxCoeff();
}

inline Mat kron(const Mat& A, const Mat& B)
{
	Mat K(A.rows() * B.rows(), A.cols() * B.cols());
	for (Eigen::Index i = 0; i < A.rows(); ++i)
		for (Eigen::Index j = 0; j < A.cols(); ++j)
			K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
	return K;
}

/// A (+) A = A (x) I + I (x) A.
inline Mat kronecker_sum(const Mat& A)
{
	const Mat I = Mat::Identity(A.rows(), A.cols());
	return kron(A, I) + kron(I, A);
}

inline double smallest_singular_value(const Mat& A)
{
	if (A.size() == 0)
		return 0.0;
	if (A.rows() > 64) {
		Eigen::BDCSVD<Mat> svd(A);
		return svd.singularValues().minCoeff();
	}
	Eigen::JacobiSVD<Mat> svd(A);
	return svd.singularValues().minCoeff();
}

namespace detail {

using CMat = Eigen::MatrixXcd;

/// Solves T Y + Y T^T = C for upper-triangular T.
inline CMat solve_kron_sum(const CMat& T, CMat C)
{
	const Eigen::Index n = T.rows();
	CMat Y(n, n);
	for (Eigen::Index j = n - 1; j >= 0; --j) {
		for (Eigen::Index k = j + 1; k < n; ++k)
			C.col(j) -= T(j, k) * Y.col(k);
		CMat M = T;
		M.diagonal().array() += T(j, j);
		Y.col(j) = M.triangularView<Eigen::Upper>().solve(C.col(j));
	}
	return Y;
}

/// Solves T^H Z + Z conj(T) = W for upper-triangular T (adjoint of the above).
inline CMat solve_kron_sum_adjoint(const CMat& T, CMat W)
{
	const Eigen::Index n = T.rows();
	const CMat TH = T.adjoint();
	CMat Z(n, n);
	for (Eigen::Index j = 0; j < n; ++j) {
		for (Eigen::Index k = 0; k < j; ++k)
			W.col(j) -= std::conj(T(k, j)) * Z.col(k);
		CMat M = TH;
		M.diagonal().array() += std::conj(T(j, j));
		Z.col(j) = M.triangularView<Eigen::Lower>().solve(W.col(j));
	}
	return Z;
}

} // namespace detail

/**
 * Smallest singular value of A (+) A without forming it. Small matrices go
 * through a dense SVD; larger ones use the complex Schur form A = U T U^H
 * (the map Y -> T Y + Y T^T is unitarily equivalent to A (+) A) and Lanczos
 * on the inverse normal operator, run until the top Ritz residual is below
 * `rtol` relative.
 */
inline double kronecker_sum_min_singular(const Mat& A, double rtol = 1e-12)
{
	const Eigen::Index n = A.rows();
	if (n == 0)
		return 0.0;
	if (n <= 5)
		return smallest_singular_value(kronecker_sum(A));

	Eigen::ComplexSchur<Mat> schur(A);
	const detail::CMat T = schur.matrixT();
	double dmin = std::numeric_limits<double>::infinity();
	for (Eigen::Index i = 0; i < n; ++i)
		for (Eigen::Index j = 0; j < n; ++j)
			dmin = std::min(dmin, std::abs(T(i, i) + T(j, j)));
	if (dmin == 0.0)
		return 0.0;

	const Eigen::Index N = n * n;
	auto apply = [&](const Eigen::VectorXcd& v) {
		const detail::CMat Y = detail::solve_kron_sum(T, Eigen::Map<const detail::CMat>(v.data(), n, n));
		const detail::CMat Z = detail::solve_kron_sum_adjoint(T, Y);
		return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(Z.data(), N));
	};

	const Eigen::Index max_steps = std::min<Eigen::Index>(N, 200);
	std::vector<Eigen::VectorXcd> Q;
	std::vector<double> alpha, beta;
	std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(n));
	std::normal_distribution<double> nd;
	Eigen::VectorXcd q(N);
	for (Eigen::Index i = 0; i < N; ++i)
		q[i] = {nd(rng), nd(rng)};
	q.normalize();
	double theta = 0.0;
	for (Eigen::Index m = 0; m < max_steps; ++m) {
		Q.push_back(q);
		Eigen::VectorXcd w = apply(q);
		alpha.push_back(q.dot(w).real());
		// full reorthogonalisation, twice
		for (int pass = 0; pass < 2; ++pass)
			for (const auto& u : Q)
				w -= u.dot(w) * u;
		const double b = w.norm();

		const Eigen::Index k = static_cast<Eigen::Index>(alpha.size());
		Mat Tk = Mat::Zero(k, k);
		for (Eigen::Index i = 0; i < k; ++i) {
			Tk(i, i) = alpha[static_cast<std::size_t>(i)];
			if (i + 1 < k)
				Tk(i, i + 1) = Tk(i + 1, i) = beta[static_cast<std::size_t>(i)];
		}
		Eigen::SelfAdjointEigenSolver<Mat> es(Tk);
		theta = es.eigenvalues()[k - 1];
		const double resid = b * std::abs(es.eigenvectors()(k - 1, k - 1));
		if (resid <= rtol * theta || b <= rtol * theta || k == N)
			break;
		beta.push_back(b);
		q = w / b;
	}
	return 1.0 / std::sqrt(theta);
}

inline double spectral_norm(const Mat& A)
{
	if (A.size() == 0)
		return 0.0;
	Eigen::JacobiSVD<Mat> svd(A);
	return svd.singularValues()[0];
}

inline bool is_spd(const Mat& Q, double tol = 1e-12)
{
	if (Q.rows() != Q.cols() || Q.rows() == 0)
		return false;
	if (!Q.isApprox(Q.transpose(), 1e-12))
		return false;
	Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
	return es.eigenvalues()[0] > tol;
}

} // namespace hyperobs
