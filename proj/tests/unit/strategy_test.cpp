#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/riccati.hpp"
#include "lqgame/strategy.hpp"
#include "oracles.hpp"

namespace lqgame {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

RegularizedEstimate estimate_of(const GameModel& m) {
  RegularizedEstimate est;
  est.A_hat = m.A;
  est.B1_hat = m.B1;
  est.B2_hat = m.B2;
  est.theta_bar = m.theta();
  est.Y_value = kalman_controllability(m.A, m.B()).Y;
  return est;
}

TEST(SelectGains, TrueScalarModelUsesRiccati) {
  const GameModel m = testing::scalar_game();
  const StrategyGains g = select_gains(estimate_of(m), weights_of(m), 1.0);
  EXPECT_EQ(g.mode, StrategyMode::RiccatiNash);
  EXPECT_NEAR(g.L1(0, 0), -std::numbers::sqrt2, 1e-10);
  EXPECT_NEAR(g.L2(0, 0), std::numbers::sqrt2 / 2, 1e-10);
  ASSERT_TRUE(g.P1_used.has_value());
  EXPECT_NEAR((*g.P1_used)(0, 0), std::numbers::sqrt2, 1e-10);
  EXPECT_NEAR(g.closed_loop_abscissa, -std::numbers::sqrt2 / 2, 1e-10);
}

TEST(SelectGains, EqualWeightsFallBackToGramian) {
  const GameModel m = testing::scalar_game(0, 1, 1, 1, 1, 1);
  const StrategyGains g = select_gains(estimate_of(m), weights_of(m), 1.0);
  EXPECT_EQ(g.mode, StrategyMode::GramianFallback);
  EXPECT_NEAR(g.L1(0, 0), -0.5, 1e-10);
  EXPECT_NEAR(g.L2(0, 0), -0.5, 1e-10);
  EXPECT_NEAR(g.closed_loop_abscissa, -1.0, 1e-10);
  EXPECT_FALSE(g.P1_used.has_value());
}

TEST(SelectGains, MissingMaximizerGivesZeroL2) {
  GameModel m = testing::two_state_game();
  m.B2.setZero();
  const StrategyGains g = select_gains(estimate_of(m), weights_of(m), 1.0);
  EXPECT_EQ(g.mode, StrategyMode::RiccatiNash);
  EXPECT_EQ(g.L2.norm(), 0.0);
  EXPECT_EQ(g.L2.rows(), 1);
  EXPECT_EQ(g.L2.cols(), 2);
}

TEST(SelectGains, ModeMatchesStabilizingFlags) {
  std::mt19937_64 rng(77);
  int riccati = 0;
  int fallback = 0;
  for (int trial = 0; trial < 60; ++trial) {
    GameModel m;
    m.A = testing::random_matrix(rng, 2, 2);
    m.B1 = testing::random_matrix(rng, 2, 1);
    m.B2 = testing::random_matrix(rng, 2, 1);
    m.D = MatrixXd::Identity(2, 2);
    m.Qw = MatrixXd::Identity(2, 2);
    m.R1 = MatrixXd::Identity(1, 1);
    m.R2 = MatrixXd::Constant(1, 1, 0.5 + 3.0 * (trial % 4));
    if (!kalman_controllability(m.A, m.B()).controllable) continue;
    const StrategyGains g = select_gains(estimate_of(m), weights_of(m), 1.0);
    const RiccatiResult r = solve_game_are(m);
    const auto* sol = std::get_if<GameRiccatiSolution>(&r);
    const bool both = sol != nullptr && sol->stabilizing_P && sol->stabilizing_P1;
    EXPECT_EQ(g.mode == StrategyMode::RiccatiNash, both);
    (both ? riccati : fallback)++;
    const MatrixXd closed = m.A + m.B1 * g.L1 + m.B2 * g.L2;
    EXPECT_LT(spectral_abscissa(closed), 0.0);
    EXPECT_NEAR(spectral_abscissa(closed), g.closed_loop_abscissa, 1e-9);
  }
  EXPECT_GT(riccati, 0);
  EXPECT_GT(fallback, 0);
}

TEST(GramianGains, Examples) {
  const MatrixXd zero = MatrixXd::Zero(1, 1);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  EXPECT_NEAR(gramian_gains(zero, one, 1.0)(0, 0), -1.0, 1e-10);

  const double expected = -2.0 / (1.0 - std::exp(-2.0));
  const MatrixXd L = gramian_gains(one, one, 1.0);
  EXPECT_NEAR(L(0, 0), expected, 1e-9);
  EXPECT_NEAR(L(0, 0), -2.31304, 1e-5);
  EXPECT_NEAR(1.0 + L(0, 0), -1.31304, 1e-5);

  const MatrixXd L2 = gramian_gains(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), 2.0);
  EXPECT_TRUE(L2.isApprox(-0.5 * MatrixXd::Identity(2, 2), 1e-10));
}

TEST(GramianGains, RejectsUncontrollablePair) {
  MatrixXd B(2, 1);
  B << 1, 0;
  EXPECT_THROW(gramian_gains(-MatrixXd::Identity(2, 2), B, 1.0), ContractViolation);
}

TEST(GramianGains, StabilizesRandomControllablePairs) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 5);
  int pairs = 0;
  while (pairs < 100) {
    const int n = size(rng);
    const int m = size(rng) % n + 1;
    const MatrixXd A = testing::random_matrix(rng, n, n, -2.0, 2.0);
    const MatrixXd B = testing::random_matrix(rng, n, m, -2.0, 2.0);
    if (!kalman_controllability(A, B).controllable) continue;
    ++pairs;
    for (double T0 : {0.5, 1.0, 5.0}) {
      const MatrixXd L = gramian_gains(A, B, T0);
      EXPECT_LT(spectral_abscissa(MatrixXd(A + B * L)), 0.0) << "n=" << n << " T0=" << T0;
    }
  }
}

TEST(GramianGains, MatchesVanLoanOracleWhenWellConditioned) {
  // Covers stable, unstable and mixed spectra, so every split is exercised.
  std::mt19937_64 rng(808);
  int checked = 0;
  while (checked < 60) {
    const int n = 1 + checked % 4;
    const MatrixXd A = testing::random_matrix(rng, n, n, -1.5, 1.5);
    const MatrixXd B = testing::random_matrix(rng, n, 1 + checked % 2);
    if (!kalman_controllability(A, B).controllable) continue;
    const double T0 = 0.5 + checked % 3;
    const MatrixXd W = testing::van_loan_gramian(A, B, T0);
    Eigen::JacobiSVD<MatrixXd> svd(W);
    if (svd.singularValues()(0) > 1e6 * svd.singularValues()(n - 1)) continue;
    const MatrixXd expected = -B.transpose() * W.inverse();
    const MatrixXd L = gramian_gains(A, B, T0);
    EXPECT_LE((L - expected).norm(), 1e-7 * (1.0 + expected.norm())) << "instance " << checked;
    ++checked;
  }
}

TEST(GramianGains, StronglyStableModesDoNotSwampTheGramian) {
  // W(0, 5) has entries up to e^80 / 16 here, far beyond what an explicit
  // inverse can resolve in double precision.
  MatrixXd A(3, 3);
  A << -8.0, 1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, -3.0;
  MatrixXd B(3, 1);
  B << 1.0, 1.0, 1.0;
  for (double T0 : {0.5, 1.0, 5.0, 10.0}) {
    const MatrixXd L = gramian_gains(A, B, T0);
    EXPECT_TRUE(L.allFinite());
    EXPECT_LT(spectral_abscissa(MatrixXd(A + B * L)), 0.0) << "T0=" << T0;
  }
}

TEST(GammaSchedule, Examples) {
  EXPECT_NEAR(gamma_schedule(100), 0.67861, 1e-5);
  EXPECT_NEAR(gamma_schedule(55), std::sqrt(std::log(55.0) / std::sqrt(55.0)), 1e-15);
  EXPECT_NEAR(gamma_schedule(55), 0.73506, 5e-5);
  EXPECT_EQ(gamma_schedule(0), gamma_schedule(2));
  EXPECT_EQ(gamma_schedule(1), gamma_schedule(2));
  EXPECT_NEAR(gamma_schedule(2), std::sqrt(std::log(2.0) / std::sqrt(2.0)), 1e-15);
  EXPECT_LT(gamma_schedule(1'000'000'000LL), 0.03);
}

TEST(GammaSchedule, DecreasesAfterPeak) {
  // log k / sqrt k peaks at k = e^2.
  for (long long k = 8; k < 100000; k = k * 3 / 2 + 1) {
    EXPECT_GT(gamma_schedule(k), gamma_schedule(k + 1));
  }
}

TEST(ApplyStrategy, Examples) {
  StrategyGains g;
  g.L1 = MatrixXd::Constant(1, 1, -std::numbers::sqrt2);
  g.L2 = MatrixXd::Constant(1, 1, std::numbers::sqrt2 / 2);
  DitherState d(1, 1);
  d.reset(0.0);

  auto [u1, u2] = apply_strategy(g, d, VectorXd::Zero(1));
  EXPECT_EQ(u1[0], 0.0);
  EXPECT_EQ(u2[0], 0.0);

  std::tie(u1, u2) = apply_strategy(g, d, VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(u1[0], -std::numbers::sqrt2);

  d.reset(0.5);
  d.accumulate(VectorXd::Constant(1, 0.2), VectorXd::Constant(1, -0.4));
  std::tie(u1, u2) = apply_strategy(g, d, VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(u1[0], -std::numbers::sqrt2 + 0.1);
  EXPECT_DOUBLE_EQ(u2[0], std::numbers::sqrt2 / 2 - 0.2);

  d.reset(0.5);
  std::tie(u1, u2) = apply_strategy(g, d, VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(u1[0], -std::numbers::sqrt2);
}

TEST(ApplyStrategy, InPlaceVariantMatches) {
  std::mt19937_64 rng(4);
  StrategyGains g;
  g.L1 = testing::random_matrix(rng, 2, 3);
  g.L2 = testing::random_matrix(rng, 1, 3);
  DitherState d(2, 1);
  d.reset(0.7);
  d.accumulate(testing::random_matrix(rng, 2, 1), testing::random_matrix(rng, 1, 1));
  const VectorXd x = testing::random_matrix(rng, 3, 1);
  const auto [u1, u2] = apply_strategy(g, d, x);
  VectorXd v1(2);
  VectorXd v2(1);
  apply_strategy(g, d, x, v1, v2);
  EXPECT_EQ(u1, v1);
  EXPECT_EQ(u2, v2);
}

}  // namespace
}  // namespace lqgame
