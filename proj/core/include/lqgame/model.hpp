#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lqgame {

/// Sizes of the state (n), the two players' inputs (m1, m2) and the noise (p).
struct ModelDims {
  int n = 0;
  int m1 = 0;
  int m2 = 0;
  int p = 0;

  /// Row count of the stacked parameter matrix theta = [A, B1, B2]^T.
  [[nodiscard]] int regressor_size() const { return n + m1 + m2; }
  [[nodiscard]] int input_size() const { return m1 + m2; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Plant dx = (A x + B1 u1 + B2 u2) dt + D dw and the payoff weights
/// x^T Qw x + u1^T R1 u1 - u2^T R2 u2. Player 1 minimises, Player 2 maximises.
struct GameModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B1;
  Eigen::MatrixXd B2;
  Eigen::MatrixXd D;
  Eigen::MatrixXd Qw;
  Eigen::MatrixXd R1;
  Eigen::MatrixXd R2;

  [[nodiscard]] ModelDims dims() const {
    return {static_cast<int>(A.rows()), static_cast<int>(B1.cols()),
            static_cast<int>(B2.cols()), static_cast<int>(D.cols())};
  }

  /// theta = [A, B1, B2]^T, shape (n+m1+m2) x n.
  [[nodiscard]] Eigen::MatrixXd theta() const;
  /// [B1, B2].
  [[nodiscard]] Eigen::MatrixXd B() const;
};

/// Payoff weights only; what both players know.
struct QuadraticWeights {
  Eigen::MatrixXd Qw;
  Eigen::MatrixXd R1;
  Eigen::MatrixXd R2;
};

[[nodiscard]] inline QuadraticWeights weights_of(const GameModel& m) { return {m.Qw, m.R1, m.R2}; }

/// Lists every violated invariant; empty iff the model is fit for simulation.
std::vector<std::string> validate_model(const GameModel& m);

/// Splits theta = [A, B1, B2]^T back into its blocks.
struct ThetaBlocks {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B1;
  Eigen::MatrixXd B2;
};
ThetaBlocks split_theta(const Eigen::MatrixXd& theta, const ModelDims& dims);
Eigen::MatrixXd stack_theta(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B1,
                            const Eigen::MatrixXd& B2);

}  // namespace lqgame
