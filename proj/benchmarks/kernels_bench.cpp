#include <benchmark/benchmark.h>

#include <random>

#include "lqgame/estimator.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/riccati.hpp"
#include "lqgame/sim.hpp"
#include "lqgame/strategy.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  return M;
}

lqgame::GameModel two_state() {
  lqgame::GameModel m;
  m.A.resize(2, 2);
  m.A << 0.0, 1.0, -0.5, 0.3;
  m.B1.resize(2, 1);
  m.B1 << 0.0, 1.0;
  m.B2.resize(2, 1);
  m.B2 << 0.5, 0.2;
  m.D.resize(2, 1);
  m.D << 0.3, 1.0;
  m.Qw = MatrixXd::Identity(2, 2);
  m.R1 = MatrixXd::Identity(1, 1);
  m.R2 = MatrixXd::Constant(1, 1, 5.0);
  return m;
}

void BM_SolveGameAre(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(1);
  const MatrixXd A = uniform(rng, n, n, -1, 1);
  const MatrixXd B1 = uniform(rng, n, 1, -1, 1);
  const MatrixXd B2 = uniform(rng, n, 1, -0.3, 0.3);
  const MatrixXd Q = MatrixXd::Identity(n, n);
  const MatrixXd R1 = MatrixXd::Identity(1, 1);
  const MatrixXd R2 = MatrixXd::Constant(1, 1, 4.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lqgame::solve_game_are(A, B1, B2, Q, R1, R2));
  }
}
BENCHMARK(BM_SolveGameAre)->DenseRange(1, 5);

void BM_ControllabilityGramian(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(2);
  const MatrixXd A = uniform(rng, n, n, -1, 1);
  const MatrixXd B = uniform(rng, n, 2, -1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lqgame::controllability_gramian(A, B, 1.0));
  }
}
BENCHMARK(BM_ControllabilityGramian)->DenseRange(1, 5);

void BM_GramianGains(benchmark::State& state) {
  std::mt19937_64 rng(3);
  MatrixXd A = uniform(rng, 4, 4, -2, 2);
  const MatrixXd B = uniform(rng, 4, 1, -2, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lqgame::gramian_gains(A, B, static_cast<double>(state.range(0))));
  }
}
BENCHMARK(BM_GramianGains)->Arg(1)->Arg(5);

void BM_WlsStep(benchmark::State& state) {
  const lqgame::ModelDims dims{2, 1, 1, 1};
  lqgame::WlsState s = lqgame::wls_init(dims, lqgame::default_theta0(dims), MatrixXd::Identity(4, 4));
  s.scheme = state.range(0) == 0 ? lqgame::WlsScheme::Euler : lqgame::WlsScheme::Exact;
  VectorXd phi(4);
  phi << 0.3, -0.2, 0.1, 0.05;
  VectorXd dx(2);
  dx << 0.001, -0.002;
  for (auto _ : state) {
    lqgame::wls_step(s, phi, dx, 0.005);
    benchmark::DoNotOptimize(s.theta.data());
  }
}
BENCHMARK(BM_WlsStep)->Arg(0)->Arg(1);

// One simulated epoch (200 integrator steps plus one gain update).
void BM_AdaptiveEpochs(benchmark::State& state) {
  const lqgame::GameModel m = two_state();
  lqgame::SimConfig cfg;
  cfg.horizon = static_cast<double>(state.range(0));
  cfg.step = 0.005;
  cfg.seed = 11;
  cfg.x0 = VectorXd::Zero(2);
  cfg.record_stride = 1000;
  lqgame::AdaptiveSettings settings;
  settings.estimator.scheme = lqgame::WlsScheme::Exact;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lqgame::simulate_adaptive(m, cfg, settings).payoff_integral);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}
BENCHMARK(BM_AdaptiveEpochs)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
