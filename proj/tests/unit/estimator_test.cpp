#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lqgame/errors.hpp"
#include "lqgame/estimator.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/sim.hpp"
#include "oracles.hpp"

namespace lqgame {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const ModelDims kScalarDims{1, 1, 1, 1};

MatrixXd scalar_theta0() {
  MatrixXd theta(3, 1);
  theta << 0.0, 1.0, 1.0;
  return theta;
}

// One-parameter state (regressor of size 1), built by hand because wls_init
// insists on a controllable initial pair.
WlsState one_parameter_state(WlsScheme scheme) {
  WlsState s;
  s.dims = ModelDims{1, 0, 0, 1};
  s.scheme = scheme;
  s.theta = MatrixXd::Zero(1, 1);
  s.cov_gain = MatrixXd::Identity(1, 1);
  s.r = 1.0;
  s.a = 1.0;
  s.min_eig_bound = 1.0;
  return s;
}

TEST(WeightFunction, ClampAndSlowIncrease) {
  const WeightFunction f{1.0};
  EXPECT_EQ(f(0.5), 1.0);
  EXPECT_EQ(f(1.0), 1.0);
  EXPECT_NEAR(f(std::exp(3.0)), 9.0, 1e-12);
  double prev = 0.0;
  for (double x = 1.0; x < 1e150; x *= 3.7) {
    const double fx = f(x);
    EXPECT_GE(fx, 1.0);
    EXPECT_GE(fx, prev);
    // For the log family f(x^2) / f(x) -> 2^{1+delta}.
    EXPECT_LE(f(x * x), 4.0 * fx);
    prev = fx;
  }
}

TEST(WlsInit, Examples) {
  const WlsState s = wls_init(kScalarDims, scalar_theta0(), MatrixXd::Identity(3, 3));
  EXPECT_DOUBLE_EQ(s.r, 1.0);
  EXPECT_DOUBLE_EQ(s.a, 1.0);

  const WlsState s2 = wls_init(kScalarDims, scalar_theta0(), 2.0 * MatrixXd::Identity(3, 3));
  EXPECT_DOUBLE_EQ(s2.r, 0.5);
  EXPECT_DOUBLE_EQ(s2.a, 1.0);
}

TEST(WlsInit, RejectsBadInputs) {
  MatrixXd no_input = scalar_theta0();
  no_input.bottomRows(2).setZero();
  EXPECT_THROW(wls_init(kScalarDims, no_input, MatrixXd::Identity(3, 3)), ContractViolation);
  MatrixXd indefinite = MatrixXd::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  EXPECT_THROW(wls_init(kScalarDims, scalar_theta0(), indefinite), ContractViolation);
}

TEST(WlsStep, ZeroRegressorOnlyAdvancesTime) {
  WlsState s = wls_init(kScalarDims, scalar_theta0(), MatrixXd::Identity(3, 3));
  const WlsState before = s;
  wls_step(s, VectorXd::Zero(3), VectorXd::Constant(1, 0.3), 0.01);
  EXPECT_EQ(s.theta, before.theta);
  EXPECT_EQ(s.cov_gain, before.cov_gain);
  EXPECT_EQ(s.r, before.r);
  EXPECT_NEAR(s.t, 0.01, 1e-15);
}

TEST(WlsStep, HandEulerStep) {
  WlsState s = one_parameter_state(WlsScheme::Euler);
  wls_step(s, VectorXd::Ones(1), VectorXd::Constant(1, 0.01), 0.01);
  EXPECT_NEAR(s.theta(0, 0), 0.01, 1e-15);
  EXPECT_NEAR(s.cov_gain(0, 0), 0.99, 1e-15);
  EXPECT_NEAR(s.r, 1.01, 1e-15);
  EXPECT_DOUBLE_EQ(s.a, 1.0);
}

TEST(WlsStep, ExactSchemeMatchesInverseUpdate) {
  WlsState s = one_parameter_state(WlsScheme::Exact);
  wls_step(s, VectorXd::Ones(1), VectorXd::Constant(1, 0.01), 0.01);
  // cov <- (1 + 0.01)^-1, theta <- a cov_new phi e.
  EXPECT_NEAR(s.cov_gain(0, 0), 1.0 / 1.01, 1e-15);
  EXPECT_NEAR(s.theta(0, 0), 0.01 / 1.01, 1e-15);
}

TEST(WlsStep, ExactSchemeAgreesWithEulerToFirstOrder) {
  for (double h : {1e-2, 1e-3, 1e-4}) {
    WlsState euler = one_parameter_state(WlsScheme::Euler);
    WlsState exact = one_parameter_state(WlsScheme::Exact);
    wls_step(euler, VectorXd::Ones(1), VectorXd::Constant(1, h), h);
    wls_step(exact, VectorXd::Ones(1), VectorXd::Constant(1, h), h);
    EXPECT_LE(std::abs(euler.cov_gain(0, 0) - exact.cov_gain(0, 0)), 2.0 * h * h);
  }
}

class WlsProperties : public ::testing::TestWithParam<WlsScheme> {};

TEST_P(WlsProperties, CovarianceIsLoewnerDecreasingAndPositive) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const ModelDims dims{2, 1, 1, 1};
  WlsState s = wls_init(dims, default_theta0(dims), 3.0 * MatrixXd::Identity(4, 4));
  s.scheme = GetParam();
  const MatrixXd probes = testing::random_matrix(rng, 4, 8);
  double previous_trace = s.cov_gain.trace();
  double previous_r = s.r;
  for (int step = 0; step < 1000; ++step) {
    VectorXd phi(4);
    for (int i = 0; i < 4; ++i) phi[i] = 2.0 * normal(rng);
    VectorXd dx(2);
    dx << normal(rng) * 0.1, normal(rng) * 0.1;
    const MatrixXd before = s.cov_gain;
    wls_step(s, phi, dx, 0.005);
    for (int j = 0; j < probes.cols(); ++j) {
      const VectorXd v = probes.col(j);
      EXPECT_LE(v.dot(s.cov_gain * v), v.dot(before * v) + 1e-12);
    }
    EXPECT_LE(s.cov_gain.trace(), previous_trace + 1e-12);
    EXPECT_GE(s.r, previous_r);
    EXPECT_GT(s.a, 0.0);
    EXPECT_LE(s.a, 1.0);
    EXPECT_DOUBLE_EQ(s.a, 1.0 / s.f(s.r));
    previous_trace = s.cov_gain.trace();
    previous_r = s.r;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.cov_gain);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_EQ(s.cov_gain, s.cov_gain.transpose());
}

INSTANTIATE_TEST_SUITE_P(Schemes, WlsProperties,
                         ::testing::Values(WlsScheme::Euler, WlsScheme::Exact));

TEST(WlsStep, EulerOvershootTriggersFloor) {
  WlsState s = one_parameter_state(WlsScheme::Euler);
  // a h phi^T cov phi = 2 > 1, so plain Euler would make cov negative.
  wls_step(s, VectorXd::Constant(1, 10.0), VectorXd::Zero(1), 0.02);
  EXPECT_GE(s.cov_gain(0, 0), kCovFloor);
  EXPECT_EQ(s.pd_floor_events, 1);
}

TEST(WlsStep, NoiseFreeDataKeepsInformationWeightedErrorFixed) {
  // With dx = theta^T phi h the exact scheme satisfies
  // cov_{j+1}^{-1} err_{j+1} = cov_j^{-1} err_j, so the estimate error is
  // cov(t) cov(0)^{-1} err(0) at all times and shrinks with the information.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  const GameModel truth = testing::two_state_game();
  const MatrixXd theta = truth.theta();
  WlsState s = wls_init(truth.dims(), default_theta0(truth.dims()), 2.0 * MatrixXd::Identity(4, 4));
  s.scheme = WlsScheme::Exact;
  const MatrixXd invariant = s.cov_gain.inverse() * (s.theta - theta);
  const double initial_error = estimate_error(s, truth);
  const double h = 0.01;
  for (int step = 0; step < 20000; ++step) {
    VectorXd phi(4);
    for (int i = 0; i < 4; ++i) phi[i] = normal(rng);
    const VectorXd dx = theta.transpose() * phi * h;
    wls_step(s, phi, dx, h);
  }
  const MatrixXd now = s.cov_gain.inverse() * (s.theta - theta);
  EXPECT_LE((now - invariant).norm(), 1e-8 * invariant.norm());
  EXPECT_LT(estimate_error(s, truth), 0.2 * initial_error);
}

TEST(MatrixSqrt, Examples) {
  EXPECT_TRUE(matrix_sqrt_spd(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3)));
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const MatrixXd s = matrix_sqrt_spd(d);
  EXPECT_NEAR(s(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(s(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(s(0, 1), 0.0, 1e-14);
}

TEST(MatrixSqrt, ResidualOnRandomSpd) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd M = testing::random_spd(rng, 1 + trial % 7, 0.1);
    const MatrixXd S = matrix_sqrt_spd(M);
    EXPECT_LE((S * S - M).norm(), 1e-10 * M.norm());
    EXPECT_EQ(S, S.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
  MatrixXd bad = MatrixXd::Identity(2, 2);
  bad(1, 1) = -1;
  EXPECT_THROW(matrix_sqrt_spd(bad), ContractViolation);
}

TEST(Regularization, AcceptanceRule) {
  EXPECT_TRUE(accept_candidate(6.0, 4.0, 0.2));
  EXPECT_FALSE(accept_candidate(4.7, 4.0, 0.2));
  EXPECT_TRUE(accept_candidate(4.8, 4.0, 0.2));
}

TEST(Regularization, GammaMustLieInOpenInterval) {
  EXPECT_THROW(make_regularization(kScalarDims, 0.0, 1), ContractViolation);
  EXPECT_THROW(make_regularization(kScalarDims, std::numbers::sqrt2 - 1.0, 1), ContractViolation);
  EXPECT_NO_THROW(make_regularization(kScalarDims, 0.2, 1));
}

TEST(Regularization, UnitBallSamplingIsUniformInRadius) {
  std::mt19937_64 rng(31);
  const int rows = 3;
  const int cols = 2;
  const double d = rows * cols;
  int inside_half = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const MatrixXd eta = sample_unit_ball(rng, rows, cols);
    ASSERT_LE(eta.norm(), 1.0);
    if (eta.norm() <= 0.5) ++inside_half;
  }
  // P(|eta| <= r) = r^d for the uniform ball.
  const double expected = std::pow(0.5, d);
  const double sd = std::sqrt(expected * (1 - expected) / draws);
  EXPECT_NEAR(static_cast<double>(inside_half) / draws, expected, 5 * sd);
}

TEST(Regularization, FirstEpochKeepsBetaZero) {
  const WlsState s = wls_init(kScalarDims, scalar_theta0(), MatrixXd::Identity(3, 3));
  RegularizationState reg = make_regularization(kScalarDims, 0.2, 5);
  const RegularizedEstimate est = regularize(s, reg);
  EXPECT_EQ(est.epoch, 0);
  EXPECT_FALSE(est.beta_accepted);
  EXPECT_EQ(reg.beta.norm(), 0.0);
  EXPECT_EQ(est.theta_bar, s.theta);
  EXPECT_NEAR(est.Y_value, 2.0, 1e-12);
  EXPECT_EQ(reg.k, 1);
}

TEST(Regularization, AcceptedBetaMultipliesY) {
  WlsState s = wls_init(kScalarDims, scalar_theta0(), MatrixXd::Identity(3, 3));
  RegularizationState reg = make_regularization(kScalarDims, 0.2, 8);
  double incumbent = regularize(s, reg).Y_value;
  int accepted = 0;
  for (int k = 1; k < 200; ++k) {
    const RegularizedEstimate est = regularize(s, reg);
    EXPECT_LE(reg.beta.norm(), 1.0);
    if (est.beta_accepted) {
      EXPECT_GE(est.Y_value, 1.2 * incumbent);
      ++accepted;
    } else {
      EXPECT_DOUBLE_EQ(est.Y_value, incumbent);
    }
    incumbent = est.Y_value;
  }
  EXPECT_GT(accepted, 0);
  EXPECT_EQ(accepted, reg.acceptances);
}

TEST(Regularization, VanishingCovarianceLeavesEstimateUntouched) {
  WlsState s = wls_init(kScalarDims, scalar_theta0(), 1e-20 * MatrixXd::Identity(3, 3));
  RegularizationState reg = make_regularization(kScalarDims, 0.2, 4);
  regularize(s, reg);
  for (int k = 0; k < 20; ++k) {
    const RegularizedEstimate est = regularize(s, reg);
    EXPECT_LE((est.theta_bar - s.theta).norm(), 1e-9);
  }
}

TEST(EstimateError, Examples) {
  const GameModel truth = testing::two_state_game();
  RegularizedEstimate est;
  est.A_hat = truth.A;
  est.B1_hat = truth.B1;
  est.B2_hat = truth.B2;
  EXPECT_EQ(estimate_error(est, truth), 0.0);
  est.A_hat += MatrixXd::Identity(2, 2);
  EXPECT_NEAR(estimate_error(est, truth), std::sqrt(2.0), 1e-15);

  std::mt19937_64 rng(12);
  const MatrixXd E = testing::random_matrix(rng, 2, 4);
  est.A_hat = truth.A + E.leftCols(2);
  est.B1_hat = truth.B1 + E.col(2);
  est.B2_hat = truth.B2 + E.col(3);
  EXPECT_NEAR(estimate_error(est, truth), E.norm(), 1e-14);
}

}  // namespace
}  // namespace lqgame
