#pragma once

// Reference implementations used only by the tests. They deliberately take a
// different numerical route from the library code they check.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "lqgame/model.hpp"

namespace lqgame::testing {

/// W(0,T) = int_0^T e^{-As} B B^T e^{-A^T s} ds from a single block exponential
/// (Van Loan): exp(T [[-A, BB^T], [0, A^T]]) = [[*, F12], [0, e^{A^T T}]],
/// W = F12 e^{-A^T T}.
inline Eigen::MatrixXd van_loan_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        double T) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -A;
  M.topRightCorner(n, n) = B * B.transpose();
  M.bottomRightCorner(n, n) = A.transpose();
  const Eigen::MatrixXd E = (M * T).exp();
  const Eigen::MatrixXd back = (-A.transpose() * T).exp();
  return E.topRightCorner(n, n) * back;
}

/// Solves M^T X + X M = -C through the n^2 x n^2 Kronecker system.
inline Eigen::MatrixXd kron_lyapunov(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C) {
  const Eigen::Index n = M.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(M^T X) = (I kron M^T) vec X, vec(X M) = (M^T kron I) vec X.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * M.transpose();
      K.block(i * n, j * n, n, n) += M(j, i) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

/// Stabilizing LQR solution of A^T P + P A + Q - P B R^{-1} B^T P = 0 by
/// Kleinman's Newton iteration, started from the Bass stabilizing gain.
inline Eigen::MatrixXd kleinman_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                    int iterations = 60) {
  const Eigen::Index n = A.rows();
  const double beta = A.norm() + 1.0;
  const Eigen::MatrixXd Ab = A + beta * Eigen::MatrixXd::Identity(n, n);
  // (A + bI) Z + Z (A + bI)^T = 2 B B^T, i.e. M^T Z + Z M = -C with M = (A + bI)^T.
  const Eigen::MatrixXd Z = kron_lyapunov(Ab.transpose(), -2.0 * B * B.transpose());
  Eigen::MatrixXd K = B.transpose() * Z.inverse();
  const Eigen::MatrixXd Rinv = R.inverse();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd Acl = A - B * K;
    const Eigen::MatrixXd next = kron_lyapunov(Acl, Q + K.transpose() * R * K);
    const double change = (next - P).norm();
    P = next;
    K = Rinv * B.transpose() * P;
    if (change <= 1e-14 * (1.0 + P.norm())) break;
  }
  return P;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  return M;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.5) {
  const Eigen::MatrixXd G = random_matrix(rng, n, n);
  return G * G.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline GameModel scalar_game(double a = 0.0, double b1 = 1.0, double b2 = 1.0, double q = 1.0,
                             double r1 = 1.0, double r2 = 2.0, double d = 1.0) {
  GameModel m;
  m.A = Eigen::MatrixXd::Constant(1, 1, a);
  m.B1 = Eigen::MatrixXd::Constant(1, 1, b1);
  m.B2 = Eigen::MatrixXd::Constant(1, 1, b2);
  m.D = Eigen::MatrixXd::Constant(1, 1, d);
  m.Qw = Eigen::MatrixXd::Constant(1, 1, q);
  m.R1 = Eigen::MatrixXd::Constant(1, 1, r1);
  m.R2 = Eigen::MatrixXd::Constant(1, 1, r2);
  return m;
}

/// The two-state game shipped in configs/two_state.json.
inline GameModel two_state_game() {
  GameModel m;
  m.A.resize(2, 2);
  m.A << 0.0, 1.0, -0.5, 0.3;
  m.B1.resize(2, 1);
  m.B1 << 0.0, 1.0;
  m.B2.resize(2, 1);
  m.B2 << 0.5, 0.2;
  m.D.resize(2, 1);
  m.D << 0.3, 1.0;
  m.Qw = Eigen::MatrixXd::Identity(2, 2);
  m.R1 = Eigen::MatrixXd::Identity(1, 1);
  m.R2 = Eigen::MatrixXd::Constant(1, 1, 5.0);
  return m;
}

}  // namespace lqgame::testing
