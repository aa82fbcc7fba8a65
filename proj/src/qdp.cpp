#include "ucbqrl/qdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ucbqrl {

namespace {

void check_shapes(const Kernel& kernel, const Rewards& rewards) {
  if (kernel.empty() || rewards.size() != kernel.size()) {
    throw std::invalid_argument("kernel/rewards stage counts differ");
  }
  const std::size_t S = kernel[0].size();
  for (std::size_t h = 0; h < kernel.size(); ++h) {
    if (kernel[h].size() != S || rewards[h].size() != S) {
      throw std::invalid_argument("kernel/rewards state counts differ at stage " +
                                  std::to_string(h));
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (kernel[h][s].size() != rewards[h][s].size() || kernel[h][s].empty()) {
        throw std::invalid_argument("kernel/rewards action counts differ");
      }
      for (const auto& row : kernel[h][s]) {
        if (row.size() != S) {
          throw std::invalid_argument("kernel row length != num_states");
        }
      }
    }
  }
}

std::vector<FiniteDist> terminal_row(std::size_t num_states) {
  return std::vector<FiniteDist>(num_states, FiniteDist::dirac(0.0));
}

void check_simplex(std::span<const double> p) {
  double total = 0.0;
  for (double v : p) {
    if (v < -FiniteDist::kProbTol) {
      throw std::invalid_argument("probability vector has negative entry");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("probability vector sums to " + std::to_string(total));
  }
}

// Union of continuation support points, coincident values fused.
std::vector<double> union_support(std::span<const FiniteDist> dists) {
  std::vector<double> grid;
  for (const auto& d : dists) {
    grid.insert(grid.end(), d.support().begin(), d.support().end());
  }
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  for (double x : grid) {
    if (out.empty() || x - out.back() >= FiniteDist::kValueTol) out.push_back(x);
  }
  return out;
}

}  // namespace

ValueTable eval_policy(const Kernel& kernel, const Rewards& rewards,
                       const MarkovPolicy& policy) {
  check_shapes(kernel, rewards);
  const int H = static_cast<int>(kernel.size());
  const int S = static_cast<int>(kernel[0].size());
  const int A = static_cast<int>(kernel[0][0].size());
  if (policy.horizon() != H || policy.num_states() != S) {
    throw std::invalid_argument("eval_policy: policy shape mismatch");
  }

  ValueTable table;
  table.dists.resize(H + 1);
  table.dists[H] = terminal_row(S);
  for (int h = H - 1; h >= 0; --h) {
    table.dists[h].reserve(S);
    for (int s = 0; s < S; ++s) {
      const int a = policy.at(h, s);
      if (a < 0 || a >= A) {
        throw std::invalid_argument("eval_policy: action index out of range");
      }
      table.dists[h].push_back(
          mix(kernel[h][s][a], table.dists[h + 1]).shifted(rewards[h][s][a]));
    }
  }
  return table;
}

ValueTable qmdp_plan(const Kernel& kernel, const Rewards& rewards) {
  check_shapes(kernel, rewards);
  const int H = static_cast<int>(kernel.size());
  const int S = static_cast<int>(kernel[0].size());

  ValueTable table;
  table.dists.resize(H + 1);
  table.dists[H] = terminal_row(S);
  for (int h = H - 1; h >= 0; --h) {
    table.dists[h].reserve(S);
    for (int s = 0; s < S; ++s) {
      std::vector<FiniteDist> per_action;
      per_action.reserve(kernel[h][s].size());
      for (std::size_t a = 0; a < kernel[h][s].size(); ++a) {
        per_action.push_back(
            mix(kernel[h][s][a], table.dists[h + 1]).shifted(rewards[h][s][a]));
      }
      table.dists[h].push_back(upper_envelope(per_action));
    }
  }
  return table;
}

double opt_allocation(std::span<const double> p,
                      std::span<const FiniteDist> continuations, double tau) {
  if (p.size() != continuations.size() || p.empty()) {
    throw std::invalid_argument("opt_allocation: dimension mismatch");
  }
  if (!(tau > 0.0) || tau > 1.0) {
    throw std::invalid_argument("opt_allocation: tau outside (0, 1]");
  }
  check_simplex(p);

  const auto candidates = union_support(continuations);
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    double budget = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      budget += p[i] * continuations[i].cdf_left(*it);
    }
    // Budget q_i = cdf_left_i(v) is the infimal allocation whose value
    // reaches v at state i; the smallest candidate always passes.
    if (budget < tau + FiniteDist::kProbTol) return *it;
  }
  throw std::logic_error("opt_allocation: no feasible candidate");
}

double opt_allocation_grid(std::span<const double> p,
                           std::span<const FiniteDist> continuations, double tau,
                           int grid_n) {
  if (p.size() != continuations.size() || p.empty()) {
    throw std::invalid_argument("opt_allocation_grid: dimension mismatch");
  }
  if (grid_n < 1) throw std::invalid_argument("opt_allocation_grid: grid_n < 1");
  check_simplex(p);

  // For each state the cheapest grid budget whose quantile reaches v is
  // found independently; summing those is equivalent to enumerating the
  // full q grid because the objective only asks each state to clear v.
  const auto candidates = union_support(continuations);
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    double budget = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      // Smallest k in 1..n with quantile(k/n) >= v; the level q_i = 1
      // always works when the state's maximum clears v, and exclusion
      // (q_i = 1) costs the same budget otherwise.
      int lo = 1;
      int hi = grid_n;
      int found = grid_n;
      if (continuations[i].max_value() < *it - FiniteDist::kValueTol) {
        budget += p[i];  // exclusion: q_i = 1
        continue;
      }
      while (lo <= hi) {
        const int mid = lo + (hi - lo) / 2;
        if (continuations[i].quantile(double(mid) / grid_n) >=
            *it - FiniteDist::kValueTol) {
          found = mid;
          hi = mid - 1;
        } else {
          lo = mid + 1;
        }
      }
      budget += p[i] * (double(found) / grid_n);
    }
    if (budget <= tau + FiniteDist::kProbTol) return *it;
  }
  return -std::numeric_limits<double>::infinity();
}

MarkovPolicy extract_greedy(const ValueTable& table, const Kernel& kernel,
                            const Rewards& rewards, double tau) {
  check_shapes(kernel, rewards);
  const int H = static_cast<int>(kernel.size());
  const int S = static_cast<int>(kernel[0].size());
  if (table.horizon() != H || table.num_states() != S) {
    throw std::invalid_argument("extract_greedy: table shape mismatch");
  }

  MarkovPolicy policy = MarkovPolicy::zeros(H, S);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (std::size_t a = 0; a < kernel[h][s].size(); ++a) {
        const double v = rewards[h][s][a] +
                         mix(kernel[h][s][a], table.dists[h + 1]).quantile(tau);
        if (v > best) {
          best = v;
          best_a = static_cast<int>(a);
        }
      }
      policy.actions[h][s] = best_a;
    }
  }
  return policy;
}

std::optional<std::uint64_t> policy_count(int num_states, int num_actions,
                                          int horizon, std::uint64_t cap) {
  std::uint64_t count = 1;
  for (int i = 0; i < num_states * horizon; ++i) {
    if (count > cap / static_cast<std::uint64_t>(num_actions)) return std::nullopt;
    count *= static_cast<std::uint64_t>(num_actions);
  }
  if (count > cap) return std::nullopt;
  return count;
}

bool next_policy(MarkovPolicy& policy, int num_actions) {
  for (int h = policy.horizon() - 1; h >= 0; --h) {
    for (int s = policy.num_states() - 1; s >= 0; --s) {
      if (++policy.actions[h][s] < num_actions) return true;
      policy.actions[h][s] = 0;
    }
  }
  return false;
}

BruteForceResult brute_force_best(const TabularMDP& m, double tau) {
  if (!policy_count(m.num_states, m.num_actions, m.horizon)) {
    throw std::invalid_argument("brute_force_best: more than " +
                                std::to_string(kPolicyEnumerationCap) +
                                " policies, instance too large to enumerate");
  }

  BruteForceResult best;
  best.value = -std::numeric_limits<double>::infinity();
  MarkovPolicy policy = MarkovPolicy::zeros(m.horizon, m.num_states);
  do {
    const double v =
        eval_policy(m.kernel, m.rewards, policy).at(0, m.start_state).quantile(tau);
    // Strict > keeps the first (lexicographically smallest) maximizer.
    if (v > best.value) {
      best.value = v;
      best.policy = policy;
    }
  } while (next_policy(policy, m.num_actions));
  return best;
}

}  // namespace ucbqrl
