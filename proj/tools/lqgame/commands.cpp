#include "lqgame/commands.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "lqgame/diagnostics.hpp"
#include "lqgame/errors.hpp"
#include "lqgame/riccati.hpp"
#include "lqgame/sim.hpp"

namespace lqgame::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 6) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", digits, v);
  return buf.data();
}

std::string sci(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.3e", v);
  return buf.data();
}

void print_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& M) {
  out << name << ":\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out << " ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << ' ' << fixed(M(i, j));
    out << '\n';
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_summary(const fs::path& path, const ExperimentConfig& config, const Trajectory& traj,
                   const std::string& status) {
  std::map<std::string, int> modes;
  for (const auto& e : traj.epochs) ++modes[to_string(e.mode)];
  const double final_error = traj.epochs.empty() ? 0.0 : traj.epochs.back().estimate_error;

  auto f = open_output(path);
  f << "status: " << status << '\n';
  f << "seed: " << config.sim.seed << '\n';
  f << "T: " << config.sim.horizon << '\n';
  f << "h: " << config.sim.step << '\n';
  f << "dither: " << (config.sim.dither_enabled ? "on" : "off") << '\n';
  f << "elapsed: " << traj.elapsed << '\n';
  f << "payoff_average: " << sci(traj.elapsed > 0 ? traj.payoff_integral / traj.elapsed : 0.0) << '\n';
  f << "stability_average: " << sci(traj.elapsed > 0 ? traj.stability_integral / traj.elapsed : 0.0)
    << '\n';
  f << "final_estimate_error: " << sci(final_error) << '\n';
  f << "regularization_acceptances: " << traj.acceptances << '\n';
  f << "pd_floor_events: " << traj.pd_floor_events << '\n';
  f << "modes:";
  for (const auto& [name, count] : modes) f << ' ' << name << '=' << count;
  f << '\n';
}

void write_run_outputs(const fs::path& dir, const ExperimentConfig& config, const Trajectory& traj,
                       const std::string& status) {
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "trajectory.csv");
    write_trajectory_csv(f, traj);
  }
  {
    auto f = open_output(dir / "epochs.csv");
    write_epoch_csv(f, traj);
  }
  write_summary(dir / "summary.txt", config, traj, status);
  if (config.output.emit_plot_script) write_plot_script(dir);
}

}  // namespace

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig config = load_config(opts.config, opts.overrides);
  if (opts.seed) config.sim.seed = *opts.seed;
  if (opts.seeds) {
    if (*opts.seeds < 1) throw ConfigError("--seeds", "must be >= 1");
    config.diagnostics.n_seeds = *opts.seeds;
  }
  if (opts.threads) config.diagnostics.threads = *opts.threads;
  if (opts.no_dither) config.sim.dither_enabled = false;
  if (opts.emit_plot_script) config.output.emit_plot_script = true;
  return config;
}

fs::path resolve_output_dir(const CommonOptions& opts, const ExperimentConfig& config) {
  if (opts.output_dir) return *opts.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return config.output.directory;
}

int cmd_simulate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
  try {
    const Trajectory traj = simulate_adaptive(config.model, config.sim, config.adaptive);
    write_run_outputs(out_dir, config, traj, "ok");
    out << "wrote " << (out_dir / "trajectory.csv").string() << '\n';
    return kExitOk;
  } catch (const DivergenceError& e) {
    write_run_outputs(out_dir, config, e.partial(), "diverged");
    err << "divergence: " << e.what() << " (partial outputs in " << out_dir.string() << ")\n";
    return kExitDivergence;
  }
}

int cmd_riccati(const ExperimentConfig& config, std::ostream& out, std::ostream& /*err*/) {
  const GameModel& m = config.model;
  const RiccatiResult result = solve_game_are(m);
  if (const auto* none = std::get_if<NoStabilizingSolution>(&result)) {
    out << "NoStabilizingSolution(" << to_string(none->reason) << ")\n";
    if (!none->detail.empty()) out << "detail: " << none->detail << '\n';
    return kExitOk;
  }
  const auto& sol = std::get<GameRiccatiSolution>(result);
  print_matrix(out, "P1", sol.P1);
  print_matrix(out, "P2", sol.P2);
  const NashGains g = gains_from_p1(sol.P1, m.B1, m.B2, m.R1, m.R2);
  print_matrix(out, "L1", g.L1);
  print_matrix(out, "L2", g.L2);
  const Eigen::VectorXcd eig = sol.A_cl_P1.eigenvalues();
  out << "closed-loop eigenvalues:";
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    out << ' ' << fixed(eig[i].real());
    if (eig[i].imag() != 0.0) out << (eig[i].imag() < 0 ? "-" : "+") << fixed(std::abs(eig[i].imag())) << 'j';
  }
  out << '\n';
  out << "stabilizing: P=" << (sol.stabilizing_P ? "yes" : "no")
      << " P1=" << (sol.stabilizing_P1 ? "yes" : "no") << '\n';
  out << "residual: " << sci(sol.residual) << '\n';
  out << "value tr(D^T P D): " << fixed(nash_value(sol.P1, m.D)) << '\n';
  return kExitOk;
}

int cmd_diagnose(const ExperimentConfig& config, const std::string& experiment,
                 const fs::path& out_dir, std::ostream& out, std::ostream& /*err*/) {
  const ExperimentSetup setup = make_setup(config);
  DiagnosticsReport report;
  if (experiment == "stability") {
    report = check_stability(setup);
  } else if (experiment == "consistency") {
    report = check_consistency(setup, config.diagnostics.checkpoints);
  } else if (experiment == "nash-value") {
    report = check_nash_value(setup);
  } else if (experiment == "nash-gap") {
    report = check_nash_gap(setup, config.diagnostics.deviations);
  } else if (experiment == "dither") {
    report = check_dither_energy(setup, config.diagnostics.dither_epochs);
  } else {
    throw ConfigError("experiment", "unknown experiment id '" + experiment +
                                        "' (expected stability, consistency, nash-value, "
                                        "nash-gap or dither)");
  }
  fs::create_directories(out_dir);
  {
    auto f = open_output(out_dir / (experiment + "_report.txt"));
    report.write_text(f);
  }
  {
    auto f = open_output(out_dir / (experiment + "_seeds.csv"));
    report.write_seed_csv(f);
  }
  report.write_text(out);
  return report.passed() ? kExitOk : kExitCriteriaFailed;
}

int cmd_ensemble(const ExperimentConfig& config, std::size_t n, const fs::path& out_dir,
                 std::ostream& out, std::ostream& /*err*/, const MemberHook& hook) {
  if (n < 1) throw ConfigError("--seeds", "must be >= 1");
  const auto runs =
      run_ensemble(config.model, config.sim, config.adaptive, n, config.diagnostics.threads, hook);
  fs::create_directories(out_dir);
  {
    auto f = open_output(out_dir / "ensemble.csv");
    write_ensemble_csv(f, runs);
  }
  std::vector<double> payoff;
  std::vector<double> stability;
  std::vector<double> error;
  std::size_t diverged = 0;
  std::size_t failed = 0;
  for (const auto& r : runs) {
    if (r.diverged || r.numerical_failure) {
      ++(r.diverged ? diverged : failed);
      out << "seed " << r.seed << " (member " << r.index << ") failed: " << r.failure << '\n';
      continue;
    }
    payoff.push_back(r.payoff_average);
    stability.push_back(r.stability_average);
    error.push_back(r.final_estimate_error);
  }
  out << "members: " << runs.size() << ", diverged: " << diverged
      << ", numerical failures: " << failed << '\n';
  if (!payoff.empty()) {
    out << "median payoff_average: " << sci(summary_stats(payoff).median) << '\n';
    out << "median stability_average: " << sci(summary_stats(stability).median) << '\n';
    out << "median final_estimate_error: " << sci(summary_stats(error).median) << '\n';
  }
  if (diverged > 0) return kExitDivergence;
  return failed == 0 ? kExitOk : kExitNumerical;
}

void write_plot_script(const fs::path& out_dir) {
  auto f = open_output(out_dir / "plot.py");
  f << R"(#!/usr/bin/env python3
"""Plots payoff average and estimate error from trajectory.csv and epochs.csv."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(here, name), newline="") as fh:
        return list(csv.DictReader(fh))


traj = read("trajectory.csv")
epochs = read("epochs.csv")

t = [float(r["t"]) for r in traj]
payoff = [float(r["running_payoff"]) / s if s > 0 else 0.0 for r, s in zip(traj, t)]
k = [int(r["epoch"]) for r in epochs]
err = [float(r["estimate_error"]) for r in epochs]

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
ax1.plot(t, payoff)
ax1.set_ylabel("payoff average")
ax2.semilogy(k, err)
ax2.set_ylabel("estimate error")
ax2.set_xlabel("t")
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "plot.png")
fig.savefig(out)
)";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive strategies for zero-sum LQ stochastic differential games"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lqgame 0.1.0");

  CommonOptions opts;
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::size_t seeds = 0;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opts.config, "experiment config (JSON)")->required();
    sub->add_option("--override", opts.overrides, "KEY=VALUE, repeatable (e.g. sim.h=0.01)");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--output-dir", output_dir, "output directory");
    sub->add_option("--seeds", seeds, "number of seeded members");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_flag("--emit-plot-script", opts.emit_plot_script, "also write plot.py");
    sub->add_flag("--no-dither", opts.no_dither, "disable the excitation dither");
  };

  auto* simulate = app.add_subcommand("simulate", "one adaptive closed-loop run");
  auto* riccati = app.add_subcommand("riccati", "solve the game Riccati equation of the model");
  auto* diagnose = app.add_subcommand("diagnose", "run a diagnostics experiment");
  auto* ensemble = app.add_subcommand("ensemble", "seeded batch of adaptive runs");
  for (auto* sub : {simulate, riccati, diagnose, ensemble}) add_common(sub);
  diagnose->add_option("experiment", experiment, "stability|consistency|nash-value|nash-gap|dither")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) opts.seed = seed;
  if (active->count("--output-dir") > 0) opts.output_dir = output_dir;
  if (active->count("--seeds") > 0) opts.seeds = seeds;
  if (active->count("--threads") > 0) opts.threads = threads;

  try {
    const ExperimentConfig config = resolve_config(opts);
    const fs::path dir = resolve_output_dir(opts, config);
    if (active == simulate) return cmd_simulate(config, dir, out, err);
    if (active == riccati) return cmd_riccati(config, out, err);
    if (active == diagnose) return cmd_diagnose(config, experiment, dir, out, err);
    return cmd_ensemble(config, config.diagnostics.n_seeds, dir, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InapplicableExperiment& e) {
    err << "experiment not applicable: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractViolation& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace lqgame::cli
