#pragma once

// Dense linear-algebra kernels shared by every other module. All functions are
// pure and safe to call concurrently.

#include <Eigen/Dense>

namespace lqgame {

/// Max real part over the eigenvalues of a square matrix. The real overload
/// balances before the Hessenberg/QR iteration.
/// Throws NumericalFailure if the eigenvalue iteration does not converge.
double spectral_abscissa(const Eigen::MatrixXd& M);
double spectral_abscissa(const Eigen::MatrixXcd& M);

/// Diagonal similarity D^{-1} M D with row/column norms equalised (powers of 2,
/// so the transformation is exact).
Eigen::MatrixXd balance(const Eigen::MatrixXd& M);

/// e^{M t} by Pade scaling-and-squaring. Throws NumericalFailure on overflow.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double t);

/// W(0,T0) = int_0^T0 e^{-A s} B B^T e^{-A^T s} ds by adaptive Gauss-Kronrod
/// quadrature (relative tolerance 1e-10 on the Frobenius norm).
/// The integrand uses e^{-A s}, so unstable A is fine.
Eigen::MatrixXd controllability_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        double T0);

struct ControllabilityReport {
  int rank = 0;
  /// n-th singular value of [B, AB, ..., A^{n-1}B]; zero if it has fewer columns than rows.
  double min_sv = 0.0;
  /// det(sum_i A^i B B^T A^{iT}).
  double Y = 0.0;
  bool controllable = false;
};

/// Kalman rank test. The pair is declared controllable iff
/// min_sv > 1e-8 * (1 + ||A||_F + ||B||_F); the same cutoff decides rank.
ControllabilityReport kalman_controllability(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Tolerance used by kalman_controllability for the rank decision.
double controllability_threshold(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Solves T^H X + X T = C for X (complex Bartels-Stewart).
/// Requires lambda_i(T)^* + lambda_j(T) != 0 for all i, j.
Eigen::MatrixXcd solve_lyapunov(const Eigen::MatrixXcd& T, const Eigen::MatrixXcd& C);

/// ||M - M^T||_F <= tol * max(1, ||M||_F).
bool is_symmetric(const Eigen::MatrixXd& M, double tol = 1e-12);

}  // namespace lqgame
