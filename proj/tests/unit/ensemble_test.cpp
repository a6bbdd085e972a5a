#include <sstream>

#include <gtest/gtest.h>

#include "lqgame/ensemble.hpp"
#include "lqgame/errors.hpp"
#include "lqgame/random.hpp"
#include "oracles.hpp"

namespace lqgame {
namespace {

using Eigen::VectorXd;

SimConfig base_config() {
  SimConfig cfg;
  cfg.horizon = 40;
  cfg.step = 0.01;
  cfg.seed = 1234;
  cfg.x0 = (VectorXd(2) << 1, 0).finished();
  cfg.record_stride = 50;
  return cfg;
}

AdaptiveSettings exact_settings() {
  AdaptiveSettings s;
  s.estimator.scheme = WlsScheme::Exact;
  return s;
}

std::string csv(const std::vector<RunSummary>& runs) {
  std::ostringstream out;
  write_ensemble_csv(out, runs);
  return out.str();
}

TEST(ParallelMap, PreservesIndexOrder) {
  const auto out = parallel_map(100, 4, [](std::size_t i) { return i * i; });
  ASSERT_EQ(out.size(), 100u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
  EXPECT_TRUE(parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
}

TEST(ParallelMap, RethrowsTaskError) {
  EXPECT_THROW(parallel_map(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw NumericalFailure("boom");
                              return i;
                            }),
               NumericalFailure);
}

TEST(RunEnsemble, IndependentOfThreadCount) {
  const GameModel m = testing::two_state_game();
  const auto one = run_ensemble(m, base_config(), exact_settings(), 5, 1);
  const auto many = run_ensemble(m, base_config(), exact_settings(), 5, 4);
  EXPECT_EQ(csv(one), csv(many));
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].index, i);
    EXPECT_EQ(one[i].seed, member_seed(1234, i));
  }
}

TEST(RunEnsemble, SingleMemberMatchesDirectRun) {
  const GameModel m = testing::two_state_game();
  const auto runs = run_ensemble(m, base_config(), exact_settings(), 1, 1);
  SimConfig cfg = base_config();
  cfg.seed = member_seed(cfg.seed, 0);
  const Trajectory traj = simulate_adaptive(m, cfg, exact_settings());
  const RunSummary direct = summarize(traj, cfg.seed, 0);
  EXPECT_EQ(csv(runs), csv({direct}));
  EXPECT_EQ(runs[0].payoff_average, traj.payoff_average());
}

TEST(RunEnsemble, DivergingMemberIsIsolated) {
  const GameModel m = testing::two_state_game();
  const MemberHook hook = [](std::size_t index, SimConfig&, AdaptiveSettings& s) {
    if (index == 2) {
      s.gain_hook = [](StrategyGains& g) { g.L1.setConstant(25.0); };
    }
  };
  const auto runs = run_ensemble(m, base_config(), exact_settings(), 4, 2, hook);
  ASSERT_EQ(runs.size(), 4u);
  for (std::size_t i = 0; i < runs.size(); ++i) EXPECT_EQ(runs[i].diverged, i == 2) << i;
  EXPECT_FALSE(runs[2].failure.empty());
  EXPECT_LT(runs[2].elapsed, 40.0);
  EXPECT_NE(csv(runs).find("diverged"), std::string::npos);
}

TEST(RunEnsemble, NumericalFailureIsIsolated) {
  const GameModel m = testing::two_state_game();
  const MemberHook hook = [](std::size_t index, SimConfig&, AdaptiveSettings& s) {
    if (index == 0) s.gain_hook = [](StrategyGains&) { throw NumericalFailure("injected"); };
  };
  const auto runs = run_ensemble(m, base_config(), exact_settings(), 2, 1, hook);
  EXPECT_TRUE(runs[0].numerical_failure);
  EXPECT_FALSE(runs[1].numerical_failure);
  EXPECT_NE(csv(runs).find("numerical-failure"), std::string::npos);
}

}  // namespace
}  // namespace lqgame
