#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "lqgame/model.hpp"
#include "lqgame/sim.hpp"

namespace lqgame {

/// Evaluates fn(0..count-1) on up to `threads` workers and returns the results
/// in index order, so the output never depends on scheduling. The first
/// exception thrown by any task is rethrown after all workers join.
template <typename Fn>
auto parallel_map(std::size_t count, unsigned threads, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(count, std::max(1u, threads)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Worker count used when the caller passes 0.
unsigned default_thread_count();

/// Per-run summary; the row format of the ensemble CSV.
struct RunSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  bool numerical_failure = false;  ///< run aborted by NumericalFailure; metrics are NaN
  std::string failure;
  double elapsed = 0.0;
  double payoff_average = 0.0;
  double stability_average = 0.0;
  double final_estimate_error = 0.0;
  int riccati_epochs = 0;
  int gramian_epochs = 0;
  int acceptances = 0;
  double min_Y = 0.0;
  double max_Y = 0.0;
  int pd_floor_events = 0;
};

RunSummary summarize(const Trajectory& traj, std::uint64_t seed, std::size_t index = 0);

/// Optional per-member tweak applied before the run (used for fault-injection
/// in tests).
using MemberHook = std::function<void(std::size_t index, SimConfig&, AdaptiveSettings&)>;

/// n adaptive runs with seeds member_seed(base.seed, i). A diverging or
/// numerically failing member is reported in its summary and never aborts the
/// batch.
std::vector<RunSummary> run_ensemble(const GameModel& model, const SimConfig& base,
                                     const AdaptiveSettings& settings, std::size_t n,
                                     unsigned threads, const MemberHook& hook = {});

void write_ensemble_csv(std::ostream& out, const std::vector<RunSummary>& runs);

}  // namespace lqgame
