#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "lqgame/model.hpp"

namespace lqgame {

/// f(x) = (log max(x, e))^{1+delta}: a slowly increasing weight with
/// int^inf dx / (x f(x)) < inf for any delta > 0.
struct WeightFunction {
  double delta = 1.0;

  [[nodiscard]] double operator()(double x) const;
};

/// Continuous-time weighted least-squares estimator state.
///
/// theta is the (n+m1+m2) x n matrix with theta^T = [A, B1, B2]. cov_gain is
/// the estimator's gain matrix (it shrinks as the regressor excites each
/// direction). r is the cumulative excitation ||cov_gain(0)^{-1}|| + int |phi|^2
/// and a = 1 / f(r) the current weight.
/// Time stepping for the covariance ODE. Euler is the plain explicit step;
/// Exact integrates it over the step with phi frozen,
/// cov <- (cov^-1 + a h phi phi^T)^-1, which keeps cov positive definite for
/// any step size and agrees with Euler to first order in h.
enum class WlsScheme { Euler, Exact };

std::string to_string(WlsScheme scheme);

struct WlsState {
  ModelDims dims;
  WlsScheme scheme = WlsScheme::Euler;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd cov_gain;
  double r = 0.0;
  double a = 1.0;
  double t = 0.0;
  WeightFunction f;

  /// Cheap lower bound on lambda_min(cov_gain); an exact eigen-check runs only
  /// when it falls under the floor.
  double min_eig_bound = 0.0;
  /// Number of times the PD floor had to be enforced.
  int pd_floor_events = 0;
};

inline constexpr double kCovFloor = 1e-12;

/// Throws ContractViolation if cov0 is not symmetric positive definite or the
/// (A(0), [B1(0), B2(0)]) pair encoded by theta0 is not controllable.
WlsState wls_init(const ModelDims& dims, const Eigen::MatrixXd& theta0,
                  const Eigen::MatrixXd& cov0, WeightFunction f = {});

/// One step of length h (scheme per s.scheme) given the regressor phi = [x; u1; u2]
/// at the left endpoint and the observed state increment dx over the step.
void wls_step(WlsState& s, const Eigen::Ref<const Eigen::VectorXd>& phi,
              const Eigen::Ref<const Eigen::VectorXd>& dx, double h);

/// Symmetric positive definite square root. Throws ContractViolation for
/// non-SPD input.
Eigen::MatrixXd matrix_sqrt_spd(const Eigen::MatrixXd& M);

/// State of the random search that keeps the estimated models uniformly
/// controllable. beta is the incumbent perturbation direction (Frobenius
/// norm <= 1), gamma_reg the required relative improvement for a new draw.
struct RegularizationState {
  Eigen::MatrixXd beta;
  double Y_current = 0.0;
  double gamma_reg = 0.2;
  std::mt19937_64 rng;
  int k = 0;
  int acceptances = 0;
};

/// Throws ContractViolation unless 0 < gamma_reg < sqrt(2) - 1.
RegularizationState make_regularization(const ModelDims& dims, double gamma_reg,
                                        std::uint64_t seed);

/// Piecewise-constant estimate used on the epoch (k, k+1].
struct RegularizedEstimate {
  int epoch = 0;
  Eigen::MatrixXd A_hat;
  Eigen::MatrixXd B1_hat;
  Eigen::MatrixXd B2_hat;
  Eigen::MatrixXd theta_bar;
  double Y_value = 0.0;
  double Y_candidate = 0.0;
  bool beta_accepted = false;

  [[nodiscard]] Eigen::MatrixXd B_hat() const;
};

/// Acceptance rule for a fresh draw.
[[nodiscard]] inline bool accept_candidate(double Y_candidate, double Y_incumbent, double gamma) {
  return Y_candidate >= (1.0 + gamma) * Y_incumbent;
}

/// Uniform sample from the Frobenius unit ball in R^{rows x cols}.
Eigen::MatrixXd sample_unit_ball(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

/// theta - cov_gain^{1/2} beta.
Eigen::MatrixXd perturbed_theta(const WlsState& s, const Eigen::MatrixXd& sqrt_cov,
                                const Eigen::MatrixXd& beta);

/// Runs the epoch-k regularization step. At k == 0 beta stays at zero;
/// for k >= 1 a candidate eta_k is drawn and replaces beta_{k-1} iff
/// Y(k, eta_k) >= (1 + gamma_reg) Y(k, beta_{k-1}).
RegularizedEstimate regularize(const WlsState& s, RegularizationState& reg);

/// ||[A_hat, B1_hat, B2_hat] - [A, B1, B2]||_F.
double estimate_error(const RegularizedEstimate& est, const GameModel& truth);
double estimate_error(const WlsState& s, const GameModel& truth);

}  // namespace lqgame
