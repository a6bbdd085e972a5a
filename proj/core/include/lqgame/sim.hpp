#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lqgame/estimator.hpp"
#include "lqgame/model.hpp"
#include "lqgame/strategy.hpp"

namespace lqgame {

/// Discretisation of one trajectory. Requires 0 < step <= 0.1, horizon >= 1,
/// 1/step an integer and horizon a multiple of step.
struct SimConfig {
  double horizon = 10.0;
  double step = 0.005;
  std::uint64_t seed = 0;
  Eigen::VectorXd x0;
  bool dither_enabled = true;
  int record_stride = 1;
};

/// Throws ContractViolation when the config breaks one of its invariants.
void validate_sim_config(const SimConfig& cfg, const ModelDims& dims);

struct EstimatorSettings {
  /// Initial theta = [A(0), B1(0), B2(0)]^T; must encode a controllable pair.
  Eigen::MatrixXd theta0;
  /// cov_gain(0) = cov0_scale * I.
  double cov0_scale = 1.0;
  WeightFunction f;
  double gamma_reg = 0.2;
  WlsScheme scheme = WlsScheme::Euler;
};

/// theta0 with A(0) the lower shift matrix and B(0) = e1 in the first input
/// column, which is controllable for every n.
Eigen::MatrixXd default_theta0(const ModelDims& dims);

struct AdaptiveSettings {
  EstimatorSettings estimator;
  double T0 = 1.0;
  /// gamma_k is max(gamma_schedule(k), gamma_floor).
  double gamma_floor = 0.0;
  /// Unilateral deviations: u_i <- u_i + deviation_i x. Empty means none.
  Eigen::MatrixXd deviation1;
  Eigen::MatrixXd deviation2;
  /// Test hook run after gain selection each epoch.
  std::function<void(StrategyGains&)> gain_hook;
};

/// Snapshot taken at each integer time k, right after the epoch-k estimate
/// and gains have been computed. Integrals run over [0, k].
struct EpochRecord {
  int epoch = 0;
  double estimate_error = 0.0;
  StrategyMode mode = StrategyMode::RiccatiNash;
  double gamma_k = 0.0;
  double Y_value = 0.0;
  double Y_candidate = 0.0;
  bool beta_accepted = false;
  double cov_trace = 0.0;
  double L1_norm = 0.0;
  double L2_norm = 0.0;
  double closed_loop_abscissa = 0.0;
  double state_norm_sq = 0.0;  ///< |x(k)|^2
  double theta_norm = 0.0;     ///< ||theta(k)||_F of the raw WLS estimate
  double theta_step = 0.0;     ///< ||theta(k) - theta(k-1)||_F
  double payoff_integral = 0.0;
  double stability_integral = 0.0;
  double dither_energy = 0.0;  ///< int gamma^2 (|v1 - v1(k)|^2 + |v2 - v2(k)|^2) dt
  /// int_0^k |(theta_hat - theta)^T phi|^2 ds / r(k); NaN for fixed-gain runs.
  double semi_consistency = 0.0;
};

/// Recorded trajectory. Rows are taken every record_stride steps plus the
/// final time; the running integrals are accumulated at every step.
struct Trajectory {
  ModelDims dims;
  double step = 0.0;
  double horizon = 0.0;
  int record_stride = 1;

  std::vector<double> times;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> u1;
  std::vector<Eigen::VectorXd> u2;
  std::vector<double> running_payoff;  ///< int_0^t payoff integrand
  std::vector<double> estimate_error;  ///< NaN for fixed-gain runs
  std::vector<StrategyMode> mode;
  std::vector<double> gamma_k;
  std::vector<double> stability_stat;  ///< (1/t) int_0^t |x|^2 + |u1|^2 + |u2|^2

  std::vector<EpochRecord> epochs;

  double elapsed = 0.0;  ///< time actually reached (< horizon on divergence)
  double payoff_integral = 0.0;
  double stability_integral = 0.0;
  double dither_energy = 0.0;
  int pd_floor_events = 0;
  int acceptances = 0;

  /// phi = [x; u1; u2] at row i.
  [[nodiscard]] Eigen::VectorXd regressor(std::size_t i) const;
  /// (1/T) int_0^T payoff over the full step grid.
  [[nodiscard]] double payoff_average() const;
  [[nodiscard]] double stability_average() const;
};

/// Thrown when |x| exceeds 1e9 (or goes non-finite); carries what was
/// recorded up to that point.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

inline constexpr double kDivergenceBound = 1e9;

/// Closed loop under the adaptive strategies: Euler-Maruyama for the plant,
/// one WLS step per integrator step on the plant's own increment, and at every
/// integer k a regularized estimate plus fresh gains for (k, k+1].
Trajectory simulate_adaptive(const GameModel& model, const SimConfig& cfg,
                             const AdaptiveSettings& settings);

/// Same integrator with constant gains and no estimator. Dither follows
/// cfg.dither_enabled with the standard gamma schedule.
Trajectory simulate_fixed_gains(const GameModel& model, const SimConfig& cfg,
                                const Eigen::MatrixXd& L1, const Eigen::MatrixXd& L2);

/// (1/T) sum over recorded rows of (x^T Qw x + u1^T R1 u1 - u2^T R2 u2) dt,
/// left-endpoint rule on the recorded grid.
double payoff_estimate(const Trajectory& traj, const QuadraticWeights& weights);

/// CSV with columns t, x_1..x_n, u1_*, u2_*, running_payoff, estimate_error,
/// mode, gamma_k, stability_stat; 12 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Per-epoch log: epoch, estimate_error, Y_value, beta_accepted, cov_trace,
/// mode, gamma_k, L1_norm, L2_norm, closed_loop_abscissa, semi_consistency.
void write_epoch_csv(std::ostream& out, const Trajectory& traj);

}  // namespace lqgame
