#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ucbqrl/finite_dist.hpp"
#include "ucbqrl/mdp.hpp"

namespace ucbqrl {

/// Return-distribution table indexed [h][s] for h = 0..H; row H holds
/// Dirac(0) for every state. Read through quantile(), dists[h][s] is the
/// quantile value curve at (s, h); all its support lies in [0, H - h].
struct ValueTable {
  std::vector<std::vector<FiniteDist>> dists;

  int horizon() const { return static_cast<int>(dists.size()) - 1; }
  int num_states() const {
    return dists.empty() ? 0 : static_cast<int>(dists[0].size());
  }
  const FiniteDist& at(int h, int s) const { return dists[h][s]; }
};

/// Exact policy evaluation by backward distribution propagation:
/// D_h(s) = shift(mix(P_h(.|s, pi_h(s)), D_{h+1}), r_h(s, pi_h(s))).
/// The result row 0 holds the exact law of the episode return from each
/// start state, so its quantile reproduces the policy's quantile value at
/// every level simultaneously.
ValueTable eval_policy(const Kernel& kernel, const Rewards& rewards,
                       const MarkovPolicy& policy);

/// Optimal quantile curves: the stage backup takes, per (s, a), the
/// mixture of next-state optimal curves shifted by the reward, and combines
/// actions with upper_envelope, so every level's optimum is computed in one
/// backward pass. Row 0 dominates eval_policy's curve of every Markov
/// policy pointwise.
ValueTable qmdp_plan(const Kernel& kernel, const Rewards& rewards);

/// Budget-allocation oracle: the largest candidate value v, scanned over
/// the union of continuation support points, such that
///   sum_i p[i] * cdf_left_i(v) < tau + 1e-12.
/// Equals the tau-quantile of the p-mixture of the continuations except at
/// exact budget boundaries.
double opt_allocation(std::span<const double> p,
                      std::span<const FiniteDist> continuations, double tau);

/// Independent dense-grid realization of the same program: every budget
/// vector q in {0, 1/n, ..., 1}^S is considered (evaluated separably, which
/// is equivalent to full enumeration). Returns -infinity when no grid
/// point is feasible. Intended as a cross-check for small S.
double opt_allocation_grid(std::span<const double> p,
                           std::span<const FiniteDist> continuations, double tau,
                           int grid_n);

/// Greedy policy at level tau against a planned table:
/// pi_h(s) = argmax_a [ r_h(s,a) + quantile(mix(P_h(.|s,a), V_{h+1}), tau) ],
/// ties broken toward the lowest action index. The level is held at tau for
/// every stage.
MarkovPolicy extract_greedy(const ValueTable& table, const Kernel& kernel,
                            const Rewards& rewards, double tau);

struct BruteForceResult {
  MarkovPolicy policy;
  double value = 0.0;
};

/// Exhaustive maximizer of the tau-quantile start value over all A^(S*H)
/// deterministic Markov policies; ties go to the lexicographically smallest
/// action table. Throws when the policy count exceeds the enumeration cap.
BruteForceResult brute_force_best(const TabularMDP& mdp, double tau);

constexpr std::uint64_t kPolicyEnumerationCap = 1'000'000;

/// A^(S*H) if it does not exceed cap, otherwise nullopt.
std::optional<std::uint64_t> policy_count(int num_states, int num_actions,
                                          int horizon,
                                          std::uint64_t cap = kPolicyEnumerationCap);

/// Advances an action table through lexicographic order ((h, s) row-major,
/// most significant first). Returns false after the last table wraps to
/// all zeros.
bool next_policy(MarkovPolicy& policy, int num_actions);

}  // namespace ucbqrl
