#include "lqgame/sim.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/random.hpp"

namespace lqgame {

namespace {

long long checked_steps(double span, double h, const char* what) {
  const double ratio = span / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ContractViolation(std::string("SimConfig: ") + what + " must be a multiple of the step");
  }
  return static_cast<long long>(rounded);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Shared Euler-Maruyama loop. With `adaptive` unset the gains stay at `fixed`.
class Integrator {
 public:
  Integrator(const GameModel& model, const SimConfig& cfg, const AdaptiveSettings* adaptive,
             const StrategyGains& fixed)
      : model_(model),
        cfg_(cfg),
        adaptive_(adaptive),
        dims_(model.dims()),
        streams_(cfg.seed),
        gains_(fixed),
        dither_(dims_.m1, dims_.m2) {
    validate_sim_config(cfg, dims_);
    steps_per_epoch_ = checked_steps(1.0, cfg.step, "epoch length 1");
    total_steps_ = checked_steps(cfg.horizon, cfg.step, "horizon");

    traj_.dims = dims_;
    traj_.step = cfg.step;
    traj_.horizon = cfg.horizon;
    traj_.record_stride = cfg.record_stride;

    if (adaptive_ != nullptr) {
      const Eigen::MatrixXd theta0 = adaptive_->estimator.theta0.size() > 0
                                         ? adaptive_->estimator.theta0
                                         : default_theta0(dims_);
      const int d = dims_.regressor_size();
      wls_.emplace(wls_init(dims_, theta0,
                            adaptive_->estimator.cov0_scale * Eigen::MatrixXd::Identity(d, d),
                            adaptive_->estimator.f));
      wls_->scheme = adaptive_->estimator.scheme;
      reg_.emplace(make_regularization(dims_, adaptive_->estimator.gamma_reg, streams_.eta_seed));
      previous_theta_ = wls_->theta;
      if (adaptive_->deviation1.size() > 0) check_shape(adaptive_->deviation1, dims_.m1, "deviation1");
      if (adaptive_->deviation2.size() > 0) check_shape(adaptive_->deviation2, dims_.m2, "deviation2");
    }
  }

  Trajectory run() {
    const double h = cfg_.step;
    const int n = dims_.n;
    Eigen::VectorXd x = cfg_.x0;
    Eigen::VectorXd x_next(n);
    Eigen::VectorXd phi(dims_.regressor_size());
    Eigen::VectorXd dx(n);
    Eigen::VectorXd u1(dims_.m1);
    Eigen::VectorXd u2(dims_.m2);
    Eigen::VectorXd dw(dims_.p);
    Eigen::VectorXd dv1(dims_.m1);
    Eigen::VectorXd dv2(dims_.m2);

    for (long long i = 0;; ++i) {
      const double t = static_cast<double>(i) * h;
      const bool last = i == total_steps_;
      if (i % steps_per_epoch_ == 0) start_epoch(i / steps_per_epoch_, x);

      compute_inputs(x, u1, u2);
      if (i % cfg_.record_stride == 0 || last) record_row(t, x, u1, u2);
      if (last) break;

      const double payoff =
          x.dot(model_.Qw * x) + u1.dot(model_.R1 * u1) - u2.dot(model_.R2 * u2);
      traj_.payoff_integral += payoff * h;
      traj_.stability_integral += (x.squaredNorm() + u1.squaredNorm() + u2.squaredNorm()) * h;
      if (dither_.gamma_k != 0.0) {
        traj_.dither_energy +=
            dither_.gamma_k * dither_.gamma_k * (dither_.v1.squaredNorm() + dither_.v2.squaredNorm()) * h;
      }

      streams_.w.draw(dw, h);
      dx.noalias() = (model_.A * x + model_.B1 * u1 + model_.B2 * u2) * h;
      dx.noalias() += model_.D * dw;
      x_next = x + dx;

      if (wls_) {
        phi << x, u1, u2;
        prediction_error_integral_ += (theta_gap_.transpose() * phi).squaredNorm() * h;
        wls_step(*wls_, phi, dx, h);
      }
      if (cfg_.dither_enabled) {
        streams_.v1.draw(dv1, h);
        streams_.v2.draw(dv2, h);
        dither_.accumulate(dv1, dv2);
      }

      x = x_next;
      traj_.elapsed = static_cast<double>(i + 1) * h;
      const double xnorm = x.norm();
      if (!(xnorm <= kDivergenceBound)) {
        record_row(traj_.elapsed, x, u1, u2);
        throw DivergenceError("state norm exceeded 1e9 at t = " + fmt(traj_.elapsed),
                              std::move(traj_));
      }
    }
    traj_.elapsed = cfg_.horizon;
    if (wls_) {
      traj_.pd_floor_events = wls_->pd_floor_events;
      traj_.acceptances = reg_->acceptances;
    }
    return std::move(traj_);
  }

 private:
  static void check_shape(const Eigen::MatrixXd& M, int rows, const char* name) {
    if (M.rows() != rows) throw ContractViolation(std::string("AdaptiveSettings: bad shape ") + name);
  }

  void start_epoch(long long k, const Eigen::VectorXd& x) {
    double gamma = 0.0;
    if (cfg_.dither_enabled) {
      gamma = gamma_schedule(k);
      if (adaptive_ != nullptr) gamma = std::max(gamma, adaptive_->gamma_floor);
    }
    dither_.reset(gamma);

    EpochRecord rec;
    rec.epoch = static_cast<int>(k);
    rec.gamma_k = gamma;
    rec.state_norm_sq = x.squaredNorm();
    rec.payoff_integral = traj_.payoff_integral;
    rec.stability_integral = traj_.stability_integral;
    rec.dither_energy = traj_.dither_energy;

    if (adaptive_ != nullptr) {
      const RegularizedEstimate est = regularize(*wls_, *reg_);
      gains_ = select_gains(est, weights_of(model_), adaptive_->T0);
      gains_.epoch = static_cast<int>(k);
      if (adaptive_->gain_hook) adaptive_->gain_hook(gains_);
      current_error_ = estimate_error(est, model_);
      rec.estimate_error = current_error_;
      rec.semi_consistency = prediction_error_integral_ / wls_->r;
      theta_gap_ = est.theta_bar - model_.theta();
      rec.Y_value = est.Y_value;
      rec.Y_candidate = est.Y_candidate;
      rec.beta_accepted = est.beta_accepted;
      rec.cov_trace = wls_->cov_gain.trace();
      rec.theta_norm = wls_->theta.norm();
      rec.theta_step = (wls_->theta - previous_theta_).norm();
      previous_theta_ = wls_->theta;
    } else {
      gains_.epoch = static_cast<int>(k);
      current_error_ = std::numeric_limits<double>::quiet_NaN();
      rec.estimate_error = current_error_;
      rec.semi_consistency = current_error_;
    }
    rec.mode = gains_.mode;
    rec.L1_norm = gains_.L1.norm();
    rec.L2_norm = gains_.L2.norm();
    rec.closed_loop_abscissa = gains_.closed_loop_abscissa;
    traj_.epochs.push_back(rec);
  }

  void compute_inputs(const Eigen::VectorXd& x, Eigen::VectorXd& u1, Eigen::VectorXd& u2) const {
    apply_strategy(gains_, dither_, x, u1, u2);
    if (adaptive_ != nullptr) {
      if (adaptive_->deviation1.size() > 0) u1.noalias() += adaptive_->deviation1 * x;
      if (adaptive_->deviation2.size() > 0) u2.noalias() += adaptive_->deviation2 * x;
    }
  }

  void record_row(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u1,
                  const Eigen::VectorXd& u2) {
    traj_.times.push_back(t);
    traj_.x.push_back(x);
    traj_.u1.push_back(u1);
    traj_.u2.push_back(u2);
    traj_.running_payoff.push_back(traj_.payoff_integral);
    traj_.estimate_error.push_back(current_error_);
    traj_.mode.push_back(gains_.mode);
    traj_.gamma_k.push_back(dither_.gamma_k);
    traj_.stability_stat.push_back(t > 0.0 ? traj_.stability_integral / t : 0.0);
  }

  const GameModel& model_;
  const SimConfig& cfg_;
  const AdaptiveSettings* adaptive_;
  ModelDims dims_;
  WienerStreams streams_;
  StrategyGains gains_;
  DitherState dither_;
  std::optional<WlsState> wls_;
  std::optional<RegularizationState> reg_;
  Eigen::MatrixXd previous_theta_;
  Eigen::MatrixXd theta_gap_;  ///< theta_bar_k - theta for the current epoch
  double prediction_error_integral_ = 0.0;
  double current_error_ = 0.0;
  long long steps_per_epoch_ = 1;
  long long total_steps_ = 0;
  Trajectory traj_;
};

}  // namespace

void validate_sim_config(const SimConfig& cfg, const ModelDims& dims) {
  if (!(cfg.step > 0.0 && cfg.step <= 0.1)) throw ContractViolation("SimConfig: step must lie in (0, 0.1]");
  if (!(cfg.horizon >= 1.0) || !std::isfinite(cfg.horizon)) {
    throw ContractViolation("SimConfig: horizon must be >= 1");
  }
  if (cfg.x0.size() != dims.n) throw ContractViolation("SimConfig: x0 must have n entries");
  if (!cfg.x0.allFinite()) throw ContractViolation("SimConfig: x0 must be finite");
  if (cfg.record_stride < 1) throw ContractViolation("SimConfig: record_stride must be >= 1");
  checked_steps(1.0, cfg.step, "epoch length 1");
  checked_steps(cfg.horizon, cfg.step, "horizon");
}

Eigen::MatrixXd default_theta0(const ModelDims& dims) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dims.n, dims.n);
  for (int i = 1; i < dims.n; ++i) A(i, i - 1) = 1.0;
  Eigen::MatrixXd B1 = Eigen::MatrixXd::Zero(dims.n, dims.m1);
  Eigen::MatrixXd B2 = Eigen::MatrixXd::Zero(dims.n, dims.m2);
  if (dims.n > 0) {
    if (dims.m1 > 0) {
      B1(0, 0) = 1.0;
    } else if (dims.m2 > 0) {
      B2(0, 0) = 1.0;
    }
  }
  return stack_theta(A, B1, B2);
}

Eigen::VectorXd Trajectory::regressor(std::size_t i) const {
  Eigen::VectorXd phi(dims.regressor_size());
  phi << x.at(i), u1.at(i), u2.at(i);
  return phi;
}

double Trajectory::payoff_average() const {
  return elapsed > 0.0 ? payoff_integral / elapsed : 0.0;
}

double Trajectory::stability_average() const {
  return elapsed > 0.0 ? stability_integral / elapsed : 0.0;
}

Trajectory simulate_adaptive(const GameModel& model, const SimConfig& cfg,
                             const AdaptiveSettings& settings) {
  if (const auto problems = validate_model(model); !problems.empty()) {
    throw ContractViolation("simulate_adaptive: invalid model: " + problems.front());
  }
  Integrator integrator(model, cfg, &settings, StrategyGains{});
  return integrator.run();
}

Trajectory simulate_fixed_gains(const GameModel& model, const SimConfig& cfg,
                                const Eigen::MatrixXd& L1, const Eigen::MatrixXd& L2) {
  if (const auto problems = validate_model(model); !problems.empty()) {
    throw ContractViolation("simulate_fixed_gains: invalid model: " + problems.front());
  }
  const ModelDims dims = model.dims();
  if (L1.rows() != dims.m1 || L1.cols() != dims.n || L2.rows() != dims.m2 || L2.cols() != dims.n) {
    throw ContractViolation("simulate_fixed_gains: gain shape mismatch");
  }
  StrategyGains g;
  g.L1 = L1;
  g.L2 = L2;
  g.mode = StrategyMode::Fixed;
  g.closed_loop_abscissa = spectral_abscissa(Eigen::MatrixXd(model.A + model.B1 * L1 + model.B2 * L2));
  Integrator integrator(model, cfg, nullptr, g);
  return integrator.run();
}

double payoff_estimate(const Trajectory& traj, const QuadraticWeights& weights) {
  if (traj.times.empty()) throw ContractViolation("payoff_estimate: empty trajectory");
  const double horizon = traj.times.back() - traj.times.front();
  if (!(horizon > 0.0)) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    const auto& x = traj.x[i];
    const auto& u1 = traj.u1[i];
    const auto& u2 = traj.u2[i];
    sum += (x.dot(weights.Qw * x) + u1.dot(weights.R1 * u1) - u2.dot(weights.R2 * u2)) * dt;
  }
  return sum / horizon;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const ModelDims& d = traj.dims;
  out << "t";
  for (int i = 1; i <= d.n; ++i) out << ",x_" << i;
  for (int i = 1; i <= d.m1; ++i) out << ",u1_" << i;
  for (int i = 1; i <= d.m2; ++i) out << ",u2_" << i;
  out << ",running_payoff,estimate_error,mode,gamma_k,stability_stat\n";
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    out << fmt(traj.times[r]);
    for (Eigen::Index i = 0; i < traj.x[r].size(); ++i) out << ',' << fmt(traj.x[r][i]);
    for (Eigen::Index i = 0; i < traj.u1[r].size(); ++i) out << ',' << fmt(traj.u1[r][i]);
    for (Eigen::Index i = 0; i < traj.u2[r].size(); ++i) out << ',' << fmt(traj.u2[r][i]);
    out << ',' << fmt(traj.running_payoff[r]) << ',' << fmt(traj.estimate_error[r]) << ','
        << to_string(traj.mode[r]) << ',' << fmt(traj.gamma_k[r]) << ','
        << fmt(traj.stability_stat[r]) << '\n';
  }
}

void write_epoch_csv(std::ostream& out, const Trajectory& traj) {
  out << "epoch,estimate_error,Y_value,beta_accepted,cov_trace,mode,gamma_k,L1_norm,L2_norm,"
         "closed_loop_abscissa,semi_consistency\n";
  for (const auto& e : traj.epochs) {
    out << e.epoch << ',' << fmt(e.estimate_error) << ',' << fmt(e.Y_value) << ','
        << (e.beta_accepted ? 1 : 0) << ',' << fmt(e.cov_trace) << ',' << to_string(e.mode) << ','
        << fmt(e.gamma_k) << ',' << fmt(e.L1_norm) << ',' << fmt(e.L2_norm) << ','
        << fmt(e.closed_loop_abscissa) << ',' << fmt(e.semi_consistency) << '\n';
  }
}

}  // namespace lqgame
