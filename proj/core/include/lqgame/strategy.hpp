#pragma once

#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lqgame/estimator.hpp"
#include "lqgame/model.hpp"

namespace lqgame {

/// Fixed marks non-adaptive runs with caller-supplied gains.
enum class StrategyMode { RiccatiNash, GramianFallback, Fixed };

std::string to_string(StrategyMode mode);

/// Feedback gains held constant on one epoch (k, k+1].
struct StrategyGains {
  Eigen::MatrixXd L1;  ///< m1 x n
  Eigen::MatrixXd L2;  ///< m2 x n
  StrategyMode mode = StrategyMode::RiccatiNash;
  int epoch = 0;
  std::optional<Eigen::MatrixXd> P1_used;
  /// Spectral abscissa of A_hat + B1_hat L1 + B2_hat L2.
  double closed_loop_abscissa = 0.0;
};

/// Certainty-equivalence gains for one epoch. Uses the Riccati (Nash) gains
/// from P1 when the estimated game ARE has a solution stabilizing under both
/// P and P1; otherwise the controllability-Gramian stabilizer
/// [L1; L2] = -B_hat^T W^{-1}(0, T0).
StrategyGains select_gains(const RegularizedEstimate& est, const QuadraticWeights& weights,
                           double T0);

/// -B^T W(0, T0)^{-1}. Throws ContractViolation if (A, B) is not controllable
/// and NumericalFailure if W cannot be inverted.
Eigen::MatrixXd gramian_gains(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double T0);

/// gamma_k = sqrt(log k / sqrt k) for k >= 2; k = 0, 1 reuse the k = 2 value.
double gamma_schedule(long long k);

/// Within-epoch Wiener displacement v_i(t) - v_i(k) and the epoch's gamma_k.
struct DitherState {
  double gamma_k = 0.0;
  Eigen::VectorXd v1;  ///< v1(t) - v1(k)
  Eigen::VectorXd v2;  ///< v2(t) - v2(k)

  DitherState() = default;
  DitherState(int m1, int m2) : v1(Eigen::VectorXd::Zero(m1)), v2(Eigen::VectorXd::Zero(m2)) {}

  /// Start of a new epoch: the displacement restarts from zero.
  void reset(double gamma) {
    gamma_k = gamma;
    v1.setZero();
    v2.setZero();
  }
  void accumulate(const Eigen::Ref<const Eigen::VectorXd>& dv1,
                  const Eigen::Ref<const Eigen::VectorXd>& dv2) {
    v1 += dv1;
    v2 += dv2;
  }
};

/// u1 = L1 x + gamma_k (v1(t) - v1(k)), u2 = L2 x + gamma_k (v2(t) - v2(k)).
std::pair<Eigen::VectorXd, Eigen::VectorXd> apply_strategy(const StrategyGains& g,
                                                           const DitherState& d,
                                                           const Eigen::VectorXd& x);

/// Allocation-free variant for the integrator's inner loop.
void apply_strategy(const StrategyGains& g, const DitherState& d,
                    const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> u1,
                    Eigen::Ref<Eigen::VectorXd> u2);

}  // namespace lqgame
