#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ucbqrl/mdp.hpp"
#include "ucbqrl/optimism.hpp"

namespace ucbqrl {

enum class PlannerMode { envelope, brute_force };

struct ExperimentConfig {
  std::string mdp_path;
  double tau = 0.5;
  double delta = 0.1;
  int episodes = 100;
  std::uint64_t seed = 0;
  PlannerMode planner_mode = PlannerMode::envelope;
  /// When non-empty, run() writes the result CSV here.
  std::string output_path;
};

/// Per-episode accounting. v_star and v_pi_t always come from exact
/// distribution propagation under the true kernel; rollouts only feed
/// counts. The trailing fields are in-memory audit data and do not appear
/// in the CSV.
struct RegretRecord {
  int episode = 0;
  double v_star = 0.0;
  double v_pi_t = 0.0;
  /// Envelope value of the re-plan made after this episode's rollout.
  double optimistic_value = 0.0;
  double regret_t = 0.0;
  double cum_regret = 0.0;
  double bound_t = 0.0;
  /// True when every (h,s,a) empirical row sits within its radius of the
  /// true kernel after this episode's count update.
  bool confidence_event_ok = true;

  /// Exact value of (replanned policy, representative kernel); the gap to
  /// optimistic_value shows how much the envelope exceeds any single
  /// kernel's value.
  double representative_value = 0.0;
  std::int64_t conf_cells = 0;
  std::int64_t conf_violations = 0;
  /// The policy produced by the re-plan (executed next episode).
  MarkovPolicy planned_policy;
};

/// The learning loop: roll out the current policy, update counts and the
/// empirical kernel, re-plan optimistically, and account regret against the
/// exactly computed optimum. The record list is a pure function of
/// (mdp, cfg). Throws if the instance is invalid or, when enumeration is
/// feasible, if the planner optimum and the brute-force optimum disagree
/// beyond 1e-9 (the optimum must be unambiguous before regret is measured
/// against it). bound_t is NaN when the margin cannot be enumerated.
std::vector<RegretRecord> run(const TabularMDP& mdp, const ExperimentConfig& cfg);

/// Convenience overload: loads cfg.mdp_path, runs, and writes the CSV when
/// cfg.output_path is set.
std::vector<RegretRecord> run(const ExperimentConfig& cfg);

/// Empirical exceedance rate of the l1 deviation: the fraction of seeded
/// trials in which an n-sample empirical distribution of p lands at l1
/// distance >= eps from p. Requires at least 1000 trials.
double weissman_mc(std::span<const double> p, int n, double eps, int trials,
                   std::uint64_t seed);

/// Writes the result CSV: a header plus one row per record, columns
/// episode, v_star, v_pi_t, optimistic_value, regret_t, cum_regret, bound_t,
/// confidence_event_ok. Floats carry 17 significant digits so identical
/// configs produce byte-identical files.
void write_records(std::span<const RegretRecord> records, const std::string& path);

/// Shortest-or-17-significant-digit decimal rendering, locale independent.
std::string format_double(double v);

}  // namespace ucbqrl
