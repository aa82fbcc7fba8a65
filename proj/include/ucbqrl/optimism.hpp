#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ucbqrl/finite_dist.hpp"
#include "ucbqrl/mdp.hpp"
#include "ucbqrl/qdp.hpp"

namespace ucbqrl {

/// Parameters of the l1 confidence construction. The constant c is pinned
/// to its smallest admissible value,
///   c = max{2, sqrt(2 ln(S A T H (2^S - 2) / delta))} / sqrt(ln(2 S A T H / delta)),
/// which gives the tightest radius the coverage argument permits; for S = 1
/// the Weissman term is vacuous and the numerator is 2.
struct ConfidenceSpec {
  double delta = 0.0;
  double tau = 0.0;
  int S = 0;
  int A = 0;
  int T = 0;
  int H = 0;
  double c = 0.0;

  static ConfidenceSpec make(double delta, double tau, int S, int A, int T, int H);
};

/// Confidence radius c * sqrt(ln(2SATH/delta) / max{1, n}). Positive,
/// nonincreasing in n, and at least 2 when n = 0, so an empty cell's ball
/// covers the whole simplex.
double radius(const ConfidenceSpec& spec, std::int64_t n);

/// Visit and transition counts plus the empirical kernel they induce.
/// Rows with no observations use the fixed convention "all mass on state 0";
/// the radius at count 0 covers the simplex, so the arbitrary center never
/// constrains the planner.
class EmpiricalModel {
 public:
  EmpiricalModel(int num_states, int num_actions, int horizon);

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  int horizon() const { return H_; }

  /// Folds one episode into the counts: each visited (h, s, a, s')
  /// increments its pair and triple count by one.
  void update_counts(const EpisodeTrace& trace);

  /// Bulk recording of `count` observations of (h, s, a) -> next.
  void add_observations(int h, int s, int a, int next, std::int64_t count);

  std::int64_t pair_count(int h, int s, int a) const;
  std::int64_t triple_count(int h, int s, int a, int next) const;

  /// Empirical row triple / max{1, pair}, or the zero-count convention row.
  std::vector<double> p_hat_row(int h, int s, int a) const;
  /// Full empirical kernel.
  Kernel p_hat() const;

 private:
  std::size_t pair_index(int h, int s, int a) const;

  int S_;
  int A_;
  int H_;
  std::vector<std::int64_t> pairs_;
  std::vector<std::int64_t> triples_;
};

struct MixtureMin {
  double value = 0.0;
  std::vector<double> minimizer;
};

/// Minimizes sum_i p[i] * F[i] over simplex vectors p with
/// ||p - p_hat||_1 <= rad: up to rad/2 mass moves onto the smallest-F state
/// (capped at total mass 1), taken from the largest-F states first. Returns
/// the attained value and the minimizing vector, which stays in the simplex
/// and inside the ball.
MixtureMin min_mixture_cdf(std::span<const double> p_hat, double rad,
                           std::span<const double> f_values);

struct OptimisticPlan {
  /// Optimistic quantile curves, indexed [h][s] for h = 0..H.
  ValueTable table;
  /// Greedy policy at the requested level, lowest-index ties.
  MarkovPolicy policy;
  /// One concrete ball member per (h, s, a): the minimizer at the
  /// threshold operative for the policy's quantile level. Its evaluated
  /// value may fall short of the envelope value; callers log both.
  Kernel representative;
};

/// Optimistic backward recursion: per (h, s, a) the continuation CDF is
/// pushed down to its minimum over the l1 ball at every candidate point
/// (the union of continuation supports; CDFs are step functions so nothing
/// happens between atoms), shifted by the reward, and actions combine by
/// upper envelope. The envelope CDF is checked to be nondecreasing at every
/// backup.
OptimisticPlan optimistic_plan(const EmpiricalModel& em, const ConfidenceSpec& spec,
                               const Rewards& rewards, double tau);

/// Audit realization of the same objective by exhaustive policy
/// enumeration: each deterministic policy is evaluated against its own
/// ball-minimized continuation CDFs and the best value at start_state wins.
/// Subject to the policy enumeration cap.
OptimisticPlan optimistic_plan_brute(const EmpiricalModel& em,
                                     const ConfidenceSpec& spec,
                                     const Rewards& rewards, double tau,
                                     int start_state);

/// Uniform quantile margin of the instance: the smallest CDF jump of any
/// continuation mixture mix(P_h(.|s,a), V^{pi}_{h+1}) over all stages,
/// state-action pairs, and deterministic Markov policies. Always in (0, 1];
/// equals 1 when the kernel is deterministic. Subject to the policy
/// enumeration cap.
double margin_kappa(const TabularMDP& mdp);

/// High-probability regret bound curve evaluated at each episode count in
/// t_axis (the count enters both the sqrt(T) factors and the logarithm; c
/// stays pinned by spec). Requires kappa in (0, 1].
std::vector<double> regret_bound(const ConfidenceSpec& spec, double kappa,
                                 std::span<const int> t_axis);

}  // namespace ucbqrl
