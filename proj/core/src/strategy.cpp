#include "lqgame/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <variant>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/riccati.hpp"
#include "quadrature.hpp"
#include "schur.hpp"

namespace lqgame {

std::string to_string(StrategyMode mode) {
  switch (mode) {
    case StrategyMode::RiccatiNash:
      return "riccati";
    case StrategyMode::GramianFallback:
      return "gramian";
    case StrategyMode::Fixed:
      return "fixed";
  }
  return "unknown";
}

namespace {

using cplx = std::complex<double>;

// Number of leading Schur entries (sorted by real part) whose exponential
// factor e^{-A_s T0} is pulled out of the Gramian. Splitting at k bounds the
// remaining integrand by e^{range(k)}; among splits within e of the best
// range, the widest gap between the blocks keeps the decoupling well
// conditioned.
Eigen::Index graded_split(const Eigen::VectorXd& sorted_real, double T0) {
  const Eigen::Index n = sorted_real.size();
  auto range = [&](Eigen::Index k) {
    double r = 0.0;
    if (k > 0) r += std::max(sorted_real[k - 1], 0.0);
    if (k < n) r += std::max(-sorted_real[k], 0.0);
    return r * T0;
  };
  double best_range = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k <= n; ++k) best_range = std::min(best_range, range(k));
  Eigen::Index best = -1;
  double best_gap = -1.0;
  for (Eigen::Index k = 0; k <= n; ++k) {
    if (range(k) > best_range + 1.0) continue;
    const double gap = (k == 0 || k == n) ? std::numeric_limits<double>::infinity()
                                          : sorted_real[k] - sorted_real[k - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

// -B^T W^{-1} via the block-diagonal form V^{-1} A V = diag(T11, T22) with
// W = V S W_hat S^H V^H, S = diag(e^{-T11 T0}, I). W_hat integrates only
// bounded exponentials, so strongly stable modes do not swamp the rest.
Eigen::MatrixXd graded_gramian_gains(const Eigen::MatrixXcd& T, const Eigen::MatrixXcd& U,
                                     const Eigen::MatrixXd& B, double T0, Eigen::Index k) {
  const Eigen::Index n = T.rows();
  const Eigen::Index q = n - k;
  const Eigen::MatrixXcd T11 = T.topLeftCorner(k, k);
  const Eigen::MatrixXcd T22 = T.bottomRightCorner(q, q);
  Eigen::MatrixXcd V_inv = Eigen::MatrixXcd::Identity(n, n);
  if (k > 0 && q > 0) {
    V_inv.topRightCorner(k, q) =
        -detail::solve_triangular_sylvester(T11, T22, -T.topRightCorner(k, q));
  }
  V_inv = V_inv * U.adjoint();
  const Eigen::MatrixXcd Bv = V_inv * B.cast<cplx>();

  auto integrand = [&](double s) {
    Eigen::MatrixXcd F(n, Bv.cols());
    if (k > 0) F.topRows(k) = Eigen::MatrixXcd(T11 * (T0 - s)).exp() * Bv.topRows(k);
    if (q > 0) F.bottomRows(q) = Eigen::MatrixXcd(-T22 * s).exp() * Bv.bottomRows(q);
    return Eigen::MatrixXcd(F * F.adjoint());
  };
  Eigen::MatrixXcd W_hat = detail::integrate_adaptive<Eigen::MatrixXcd>(
      integrand, 0.0, T0, 1e-10, 4096, "gramian_gains");
  W_hat = 0.5 * (W_hat + W_hat.adjoint()).eval();

  Eigen::MatrixXcd S_inv = Eigen::MatrixXcd::Identity(n, n);
  if (k > 0) S_inv.topLeftCorner(k, k) = Eigen::MatrixXcd(T11 * T0).exp();
  Eigen::LLT<Eigen::MatrixXcd> llt(W_hat);
  if (llt.info() != Eigen::Success || !W_hat.allFinite()) {
    throw NumericalFailure("gramian_gains: controllability Gramian is numerically singular");
  }
  const Eigen::MatrixXcd G = S_inv * Bv;
  const Eigen::MatrixXcd K = -llt.solve(G).adjoint() * S_inv * V_inv;
  return K.real();
}

}  // namespace

Eigen::MatrixXd gramian_gains(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double T0) {
  if (!kalman_controllability(A, B).controllable) {
    throw ContractViolation("gramian_gains: (A, B) is not controllable");
  }
  if (!(T0 > 0.0) || !std::isfinite(T0)) throw ContractViolation("gramian_gains: T0 must be positive");

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(A.cast<cplx>());
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();
  detail::reorder_schur(T, U, [](cplx a, cplx b) { return a.real() < b.real(); });
  const Eigen::VectorXd real_parts = T.diagonal().real();
  const Eigen::Index k = graded_split(real_parts, T0);

  if (k == 0) {
    // No strongly stable modes: the plain Gramian is well scaled.
    const Eigen::MatrixXd W = controllability_gramian(A, B, T0);
    Eigen::LLT<Eigen::MatrixXd> llt(W);
    if (llt.info() != Eigen::Success) {
      throw NumericalFailure("gramian_gains: controllability Gramian is numerically singular");
    }
    // -B^T W^{-1} = -(W^{-1} B)^T since W is symmetric.
    return -llt.solve(B).transpose();
  }
  return graded_gramian_gains(T, U, B, T0, k);
}

StrategyGains select_gains(const RegularizedEstimate& est, const QuadraticWeights& weights,
                           double T0) {
  StrategyGains g;
  g.epoch = est.epoch;
  const RiccatiResult result =
      solve_game_are(est.A_hat, est.B1_hat, est.B2_hat, weights.Qw, weights.R1, weights.R2);
  const auto* sol = std::get_if<GameRiccatiSolution>(&result);
  if (sol != nullptr && sol->stabilizing_P && sol->stabilizing_P1) {
    const NashGains ng = nash_gains(*sol, est.B1_hat, est.B2_hat, weights.R1, weights.R2);
    g.L1 = ng.L1;
    g.L2 = ng.L2;
    g.mode = StrategyMode::RiccatiNash;
    g.P1_used = sol->P1;
  } else {
    const Eigen::MatrixXd L = gramian_gains(est.A_hat, est.B_hat(), T0);
    const auto m1 = est.B1_hat.cols();
    g.L1 = L.topRows(m1);
    g.L2 = L.bottomRows(est.B2_hat.cols());
    g.mode = StrategyMode::GramianFallback;
  }
  g.closed_loop_abscissa = spectral_abscissa(Eigen::MatrixXd(est.A_hat + est.B1_hat * g.L1 +
                                                             est.B2_hat * g.L2));
  return g;
}

double gamma_schedule(long long k) {
  const double kk = static_cast<double>(k < 2 ? 2 : k);
  return std::sqrt(std::log(kk) / std::sqrt(kk));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> apply_strategy(const StrategyGains& g,
                                                           const DitherState& d,
                                                           const Eigen::VectorXd& x) {
  Eigen::VectorXd u1(g.L1.rows());
  Eigen::VectorXd u2(g.L2.rows());
  apply_strategy(g, d, x, u1, u2);
  return {std::move(u1), std::move(u2)};
}

void apply_strategy(const StrategyGains& g, const DitherState& d,
                    const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> u1,
                    Eigen::Ref<Eigen::VectorXd> u2) {
  u1.noalias() = g.L1 * x;
  u2.noalias() = g.L2 * x;
  if (d.gamma_k != 0.0) {
    u1 += d.gamma_k * d.v1;
    u2 += d.gamma_k * d.v2;
  }
}

}  // namespace lqgame
