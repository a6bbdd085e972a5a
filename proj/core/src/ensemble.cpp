#include "lqgame/ensemble.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "lqgame/errors.hpp"
#include "lqgame/random.hpp"

namespace lqgame {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

RunSummary summarize(const Trajectory& traj, std::uint64_t seed, std::size_t index) {
  RunSummary s;
  s.index = index;
  s.seed = seed;
  s.elapsed = traj.elapsed;
  s.payoff_average = traj.payoff_average();
  s.stability_average = traj.stability_average();
  s.final_estimate_error = traj.epochs.empty() ? 0.0 : traj.epochs.back().estimate_error;
  s.min_Y = std::numeric_limits<double>::infinity();
  s.max_Y = 0.0;
  for (const auto& e : traj.epochs) {
    if (e.mode == StrategyMode::RiccatiNash) ++s.riccati_epochs;
    if (e.mode == StrategyMode::GramianFallback) ++s.gramian_epochs;
    s.min_Y = std::min(s.min_Y, e.Y_value);
    s.max_Y = std::max(s.max_Y, e.Y_value);
  }
  if (traj.epochs.empty()) s.min_Y = 0.0;
  s.acceptances = traj.acceptances;
  s.pd_floor_events = traj.pd_floor_events;
  return s;
}

std::vector<RunSummary> run_ensemble(const GameModel& model, const SimConfig& base,
                                     const AdaptiveSettings& settings, std::size_t n,
                                     unsigned threads, const MemberHook& hook) {
  return parallel_map(n, threads, [&](std::size_t i) {
    SimConfig cfg = base;
    cfg.seed = member_seed(base.seed, i);
    AdaptiveSettings local = settings;
    if (hook) hook(i, cfg, local);
    try {
      return summarize(simulate_adaptive(model, cfg, local), cfg.seed, i);
    } catch (const DivergenceError& e) {
      RunSummary s = summarize(e.partial(), cfg.seed, i);
      s.diverged = true;
      s.failure = e.what();
      return s;
    } catch (const NumericalFailure& e) {
      RunSummary s;
      s.index = i;
      s.seed = cfg.seed;
      s.numerical_failure = true;
      s.failure = e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      s.payoff_average = s.stability_average = s.final_estimate_error = nan;
      s.min_Y = s.max_Y = nan;
      return s;
    }
  });
}

void write_ensemble_csv(std::ostream& out, const std::vector<RunSummary>& runs) {
  out << "index,seed,status,elapsed,payoff_average,stability_average,final_estimate_error,"
         "riccati_epochs,gramian_epochs,acceptances,min_Y,max_Y,pd_floor_events\n";
  for (const auto& r : runs) {
    out << r.index << ',' << r.seed << ',' << (r.diverged ? "diverged" : r.numerical_failure ? "numerical-failure" : "ok") << ','
        << fmt(r.elapsed) << ',' << fmt(r.payoff_average) << ',' << fmt(r.stability_average) << ','
        << fmt(r.final_estimate_error) << ',' << r.riccati_epochs << ',' << r.gramian_epochs << ','
        << r.acceptances << ',' << fmt(r.min_Y) << ',' << fmt(r.max_Y) << ','
        << r.pd_floor_events << '\n';
  }
}

}  // namespace lqgame
