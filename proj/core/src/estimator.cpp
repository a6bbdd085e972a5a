#include "lqgame/estimator.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"

namespace lqgame {

namespace {

double spectral_norm_of_inverse(const Eigen::MatrixXd& spd) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd, Eigen::EigenvaluesOnly);
  return 1.0 / es.eigenvalues().minCoeff();
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

std::string to_string(WlsScheme scheme) {
  return scheme == WlsScheme::Euler ? "euler" : "exact";
}

double WeightFunction::operator()(double x) const {
  const double clamped = std::max(x, std::numbers::e);
  return std::pow(std::log(clamped), 1.0 + delta);
}

WlsState wls_init(const ModelDims& dims, const Eigen::MatrixXd& theta0,
                  const Eigen::MatrixXd& cov0, WeightFunction f) {
  const int d = dims.regressor_size();
  if (theta0.rows() != d || theta0.cols() != dims.n) {
    throw ContractViolation("wls_init: theta0 must be (n+m1+m2) x n");
  }
  if (cov0.rows() != d || cov0.cols() != d) {
    throw ContractViolation("wls_init: cov0 must be (n+m1+m2) square");
  }
  if (!is_symmetric(cov0, 1e-12)) throw ContractViolation("wls_init: cov0 not symmetric");
  const double lmin = min_eigenvalue(cov0);
  if (!(lmin > 0.0)) throw ContractViolation("wls_init: cov0 not positive definite");
  if (!(f.delta > 0.0)) throw ContractViolation("wls_init: weight exponent delta must be > 0");

  const ThetaBlocks blocks = split_theta(theta0, dims);
  Eigen::MatrixXd B0(dims.n, dims.input_size());
  B0 << blocks.B1, blocks.B2;
  if (!kalman_controllability(blocks.A, B0).controllable) {
    throw ContractViolation("wls_init: initial estimate (A(0), B(0)) is not controllable");
  }

  WlsState s;
  s.dims = dims;
  s.theta = theta0;
  s.cov_gain = cov0;
  s.f = f;
  s.r = spectral_norm_of_inverse(cov0);
  s.a = 1.0 / f(s.r);
  s.min_eig_bound = lmin;
  return s;
}

void wls_step(WlsState& s, const Eigen::Ref<const Eigen::VectorXd>& phi,
              const Eigen::Ref<const Eigen::VectorXd>& dx, double h) {
  const Eigen::VectorXd g = s.cov_gain * phi;
  const double quad = phi.dot(g);
  if (quad > 0.0) {
    const double c = s.a * h;
    const Eigen::RowVectorXd innovation = dx.transpose() - (phi.transpose() * s.theta) * h;
    if (s.scheme == WlsScheme::Euler) {
      s.theta.noalias() += (s.a * g) * innovation;
      s.cov_gain.noalias() -= (c * g) * g.transpose();
      // lambda_min(cov - c g g^T) >= lambda_min(cov) * (1 - c phi^T cov phi).
      const double shrink = 1.0 - c * quad;
      s.min_eig_bound = shrink > 0.0 ? s.min_eig_bound * shrink : 0.0;
    } else {
      const double denom = 1.0 + c * quad;
      const double trace_before = s.cov_gain.trace();
      s.theta.noalias() += (s.a / denom * g) * innovation;
      s.cov_gain.noalias() -= (c / denom * g) * g.transpose();
      // lambda_min((cov^-1 + c phi phi^T)^-1) >= lambda_min(cov) / (1 + c |phi|^2 lambda_max(cov)).
      s.min_eig_bound /= 1.0 + c * phi.squaredNorm() * trace_before;
    }
    s.cov_gain = 0.5 * (s.cov_gain + s.cov_gain.transpose()).eval();

    if (s.min_eig_bound < kCovFloor) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.cov_gain);
      Eigen::VectorXd lambda = es.eigenvalues();
      if (lambda.minCoeff() < kCovFloor) {
        lambda = lambda.cwiseMax(kCovFloor);
        s.cov_gain = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
        s.cov_gain = 0.5 * (s.cov_gain + s.cov_gain.transpose()).eval();
        ++s.pd_floor_events;
      }
      s.min_eig_bound = lambda.minCoeff();
    }
  }
  s.r += phi.squaredNorm() * h;
  s.a = 1.0 / s.f(s.r);
  s.t += h;
}

Eigen::MatrixXd matrix_sqrt_spd(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw ContractViolation("matrix_sqrt_spd: matrix must be square");
  if (!is_symmetric(M, 1e-10)) throw ContractViolation("matrix_sqrt_spd: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("matrix_sqrt_spd: eigendecomposition failed");
  }
  if (M.rows() > 0 && !(es.eigenvalues().minCoeff() > 0.0)) {
    throw ContractViolation("matrix_sqrt_spd: matrix not positive definite");
  }
  const Eigen::MatrixXd S =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (S + S.transpose());
}

RegularizationState make_regularization(const ModelDims& dims, double gamma_reg,
                                        std::uint64_t seed) {
  if (!(gamma_reg > 0.0 && gamma_reg < std::numbers::sqrt2 - 1.0)) {
    throw ContractViolation("regularization: gamma_reg must lie in (0, sqrt(2) - 1)");
  }
  RegularizationState reg;
  reg.beta = Eigen::MatrixXd::Zero(dims.regressor_size(), dims.n);
  reg.gamma_reg = gamma_reg;
  reg.rng.seed(seed);
  return reg;
}

Eigen::MatrixXd RegularizedEstimate::B_hat() const {
  Eigen::MatrixXd B(A_hat.rows(), B1_hat.cols() + B2_hat.cols());
  B << B1_hat, B2_hat;
  return B;
}

Eigen::MatrixXd sample_unit_ball(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd eta(rows, cols);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = normal(rng);
    norm = eta.norm();
  } while (norm == 0.0);
  const double dim = static_cast<double>(rows * cols);
  const double radius = std::pow(unif(rng), 1.0 / dim);
  return eta * (radius / norm);
}

Eigen::MatrixXd perturbed_theta(const WlsState& s, const Eigen::MatrixXd& sqrt_cov,
                                const Eigen::MatrixXd& beta) {
  return s.theta - sqrt_cov * beta;
}

namespace {

double controllability_score(const Eigen::MatrixXd& theta, const ModelDims& dims) {
  const ThetaBlocks b = split_theta(theta, dims);
  Eigen::MatrixXd B(dims.n, dims.input_size());
  B << b.B1, b.B2;
  return kalman_controllability(b.A, B).Y;
}

}  // namespace

RegularizedEstimate regularize(const WlsState& s, RegularizationState& reg) {
  const ModelDims& dims = s.dims;
  Eigen::MatrixXd sqrt_cov;
  try {
    sqrt_cov = matrix_sqrt_spd(s.cov_gain);
  } catch (const ContractViolation& e) {
    throw NumericalFailure(std::string("regularize: ") + e.what());
  }

  RegularizedEstimate est;
  est.epoch = reg.k;
  const double Y_incumbent = controllability_score(perturbed_theta(s, sqrt_cov, reg.beta), dims);
  est.Y_candidate = Y_incumbent;
  if (reg.k >= 1) {
    const Eigen::MatrixXd eta = sample_unit_ball(reg.rng, dims.regressor_size(), dims.n);
    const double Y_eta = controllability_score(perturbed_theta(s, sqrt_cov, eta), dims);
    est.Y_candidate = Y_eta;
    if (accept_candidate(Y_eta, Y_incumbent, reg.gamma_reg)) {
      reg.beta = eta;
      est.beta_accepted = true;
      ++reg.acceptances;
    }
  }

  est.theta_bar = perturbed_theta(s, sqrt_cov, reg.beta);
  est.Y_value = est.beta_accepted ? est.Y_candidate : Y_incumbent;
  reg.Y_current = est.Y_value;
  const ThetaBlocks b = split_theta(est.theta_bar, dims);
  est.A_hat = b.A;
  est.B1_hat = b.B1;
  est.B2_hat = b.B2;
  ++reg.k;
  return est;
}

double estimate_error(const RegularizedEstimate& est, const GameModel& truth) {
  const double a = (est.A_hat - truth.A).squaredNorm();
  const double b1 = (est.B1_hat - truth.B1).squaredNorm();
  const double b2 = (est.B2_hat - truth.B2).squaredNorm();
  return std::sqrt(a + b1 + b2);
}

double estimate_error(const WlsState& s, const GameModel& truth) {
  return (s.theta - truth.theta()).norm();
}

}  // namespace lqgame
