#include "lqgame/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "lqgame/errors.hpp"
#include "quadrature.hpp"

namespace lqgame {

namespace {

void require_square(const Eigen::MatrixXd& M, const char* who) {
  if (M.rows() != M.cols()) {
    throw ContractViolation(std::string(who) + ": matrix must be square");
  }
}

}  // namespace

Eigen::MatrixXd balance(const Eigen::MatrixXd& M) {
  require_square(M, "balance");
  constexpr double radix = 2.0;
  constexpr double radix2 = radix * radix;
  Eigen::MatrixXd B = M;
  const auto n = B.rows();
  bool converged = false;
  while (!converged) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(B(j, i));
        r += std::abs(B(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix2;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix2;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        B.row(i) /= f;
        B.col(i) *= f;
      }
    }
  }
  return B;
}

double spectral_abscissa(const Eigen::MatrixXd& M) {
  require_square(M, "spectral_abscissa");
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  if (!M.allFinite()) throw NumericalFailure("spectral_abscissa: non-finite input");
  Eigen::EigenSolver<Eigen::MatrixXd> es(balance(M), /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("spectral_abscissa: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

double spectral_abscissa(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols()) throw ContractViolation("spectral_abscissa: matrix must be square");
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  if (!M.allFinite()) throw NumericalFailure("spectral_abscissa: non-finite input");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("spectral_abscissa: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double t) {
  require_square(M, "matrix_exponential");
  if (!std::isfinite(t)) throw ContractViolation("matrix_exponential: t must be finite");
  const Eigen::MatrixXd scaled = M * t;
  Eigen::MatrixXd E = scaled.exp();
  if (!E.allFinite()) throw NumericalFailure("matrix_exponential: overflow");
  return E;
}

Eigen::MatrixXd controllability_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        double T0) {
  require_square(A, "controllability_gramian");
  if (B.rows() != A.rows()) throw ContractViolation("controllability_gramian: B row mismatch");
  if (!(T0 > 0.0) || !std::isfinite(T0)) {
    throw ContractViolation("controllability_gramian: T0 must be positive");
  }
  auto integrand = [&](double s) {
    const Eigen::MatrixXd E = matrix_exponential(-A, s) * B;
    return Eigen::MatrixXd(E * E.transpose());
  };
  const Eigen::MatrixXd W = detail::integrate_adaptive<Eigen::MatrixXd>(
      integrand, 0.0, T0, 1e-10, 4096, "controllability_gramian");
  return 0.5 * (W + W.transpose());
}

double controllability_threshold(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return 1e-8 * (1.0 + A.norm() + B.norm());
}

ControllabilityReport kalman_controllability(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  require_square(A, "kalman_controllability");
  if (B.rows() != A.rows()) throw ContractViolation("kalman_controllability: B row mismatch");
  const auto n = A.rows();
  const auto m = B.cols();
  ControllabilityReport report;
  if (n == 0) {
    report.controllable = true;
    report.Y = 1.0;
    return report;
  }

  Eigen::MatrixXd C(n, n * m);
  Eigen::MatrixXd block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    C.middleCols(i * m, m) = block;
    block = A * block;
  }
  report.Y = (C * C.transpose()).determinant();

  if (m == 0) return report;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  const auto& sv = svd.singularValues();
  const double tol = controllability_threshold(A, B);
  report.rank = static_cast<int>((sv.array() > tol).count());
  report.min_sv = sv.size() >= n ? sv(n - 1) : 0.0;
  report.controllable = report.min_sv > tol;
  return report;
}

Eigen::MatrixXcd solve_lyapunov(const Eigen::MatrixXcd& T, const Eigen::MatrixXcd& C) {
  if (T.rows() != T.cols() || C.rows() != T.rows() || C.cols() != T.cols()) {
    throw ContractViolation("solve_lyapunov: dimension mismatch");
  }
  const auto n = T.rows();
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(T);
  if (schur.info() != Eigen::Success) {
    throw NumericalFailure("solve_lyapunov: Schur decomposition did not converge");
  }
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd& S = schur.matrixT();
  const Eigen::MatrixXcd F = U.adjoint() * C * U;
  const Eigen::MatrixXcd SH = S.adjoint();

  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = F.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs -= Y.col(i) * S(i, j);
    Eigen::MatrixXcd lhs = SH;
    lhs.diagonal().array() += S(j, j);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(lhs(i, i)) == 0.0) {
        throw NumericalFailure("solve_lyapunov: singular Sylvester operator");
      }
    }
    Y.col(j) = lhs.triangularView<Eigen::Lower>().solve(rhs);
  }
  return U * Y * U.adjoint();
}

bool is_symmetric(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).norm() <= tol * std::max(1.0, M.norm());
}

}  // namespace lqgame
