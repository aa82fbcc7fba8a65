#include "ucbqrl/optimism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ucbqrl {

namespace {

constexpr double kMonotoneSlack = 1e-9;

void check_rewards_shape(const Rewards& rewards, int S, int A, int H) {
  if (static_cast<int>(rewards.size()) != H) {
    throw std::invalid_argument("rewards stage count mismatch");
  }
  for (const auto& stage : rewards) {
    if (static_cast<int>(stage.size()) != S) {
      throw std::invalid_argument("rewards state count mismatch");
    }
    for (const auto& row : stage) {
      if (static_cast<int>(row.size()) != A) {
        throw std::invalid_argument("rewards action count mismatch");
      }
    }
  }
}

// Candidate thresholds and per-state CDF values for one stage's
// continuation curves; shared by every (s, a) backup at that stage.
struct StageContext {
  std::vector<double> candidates;
  std::vector<std::vector<double>> cdf_at;  // [candidate][state]
};

StageContext make_stage_context(const std::vector<FiniteDist>& continuations) {
  StageContext ctx;
  std::vector<double> grid;
  for (const auto& d : continuations) {
    grid.insert(grid.end(), d.support().begin(), d.support().end());
  }
  std::sort(grid.begin(), grid.end());
  for (double x : grid) {
    if (ctx.candidates.empty() || x - ctx.candidates.back() >= FiniteDist::kValueTol) {
      ctx.candidates.push_back(x);
    }
  }
  ctx.cdf_at.resize(ctx.candidates.size());
  std::vector<std::size_t> pos(continuations.size(), 0);
  for (std::size_t k = 0; k < ctx.candidates.size(); ++k) {
    ctx.cdf_at[k].resize(continuations.size());
    for (std::size_t i = 0; i < continuations.size(); ++i) {
      const auto& sup = continuations[i].support();
      while (pos[i] < sup.size() &&
             sup[pos[i]] <= ctx.candidates[k] + FiniteDist::kValueTol) {
        ++pos[i];
      }
      ctx.cdf_at[k][i] = pos[i] == 0 ? 0.0 : continuations[i].cum()[pos[i] - 1];
    }
  }
  return ctx;
}

struct ActionBackup {
  FiniteDist dist;                  // optimistic return law, reward included
  std::vector<double> rep_row;      // ball member at the tau threshold
};

ActionBackup backup_action(std::span<const double> p_hat, double rad,
                           const StageContext& ctx, double reward, double tau) {
  std::vector<std::pair<double, double>> points;
  points.reserve(ctx.candidates.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < ctx.candidates.size(); ++k) {
    double g = min_mixture_cdf(p_hat, rad, ctx.cdf_at[k]).value;
    g = std::clamp(g, 0.0, 1.0);
    if (g < prev - kMonotoneSlack) {
      throw std::logic_error("optimistic continuation CDF decreased at a backup");
    }
    g = std::max(g, prev);
    if (g - prev > 0.0) points.emplace_back(ctx.candidates[k], g - prev);
    prev = g;
  }

  ActionBackup out{FiniteDist::from_points(points), {}};
  out.dist = out.dist.shifted(reward);

  const double threshold = out.dist.quantile(tau) - reward;
  const auto it = std::lower_bound(ctx.candidates.begin(), ctx.candidates.end(),
                                   threshold - FiniteDist::kValueTol);
  if (it == ctx.candidates.end() ||
      std::abs(*it - threshold) > FiniteDist::kValueTol) {
    throw std::logic_error("optimistic quantile missed the candidate grid");
  }
  const auto k = static_cast<std::size_t>(it - ctx.candidates.begin());
  out.rep_row = min_mixture_cdf(p_hat, rad, ctx.cdf_at[k]).minimizer;
  return out;
}

Kernel empty_kernel(int S, int A, int H) {
  return Kernel(H, std::vector<std::vector<std::vector<double>>>(
                       S, std::vector<std::vector<double>>(A)));
}

}  // namespace

ConfidenceSpec ConfidenceSpec::make(double delta, double tau, int S, int A, int T,
                                    int H) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("ConfidenceSpec: delta outside (0, 1)");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("ConfidenceSpec: tau outside (0, 1)");
  }
  if (S < 1 || A < 1 || T < 1 || H < 1) {
    throw std::invalid_argument("ConfidenceSpec: S, A, T, H must be positive");
  }

  ConfidenceSpec spec;
  spec.delta = delta;
  spec.tau = tau;
  spec.S = S;
  spec.A = A;
  spec.T = T;
  spec.H = H;

  const double cells = double(S) * A * T * H;
  const double denom = std::sqrt(std::log(2.0 * cells / delta));
  double numer = 2.0;
  if (S >= 2) {
    // ln(SATH (2^S - 2) / delta), evaluated in log space so large S is safe.
    const double log_weissman =
        std::log(cells / delta) + S * std::log(2.0) + std::log1p(-std::exp2(1.0 - S));
    numer = std::max(numer, std::sqrt(std::max(0.0, 2.0 * log_weissman)));
  }
  spec.c = numer / denom;
  return spec;
}

double radius(const ConfidenceSpec& spec, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("radius: negative count");
  const double cells = double(spec.S) * spec.A * spec.T * spec.H;
  const double log_term = std::log(2.0 * cells / spec.delta);
  return spec.c * std::sqrt(log_term / double(std::max<std::int64_t>(1, n)));
}

EmpiricalModel::EmpiricalModel(int num_states, int num_actions, int horizon)
    : S_(num_states), A_(num_actions), H_(horizon) {
  if (S_ < 1 || A_ < 1 || H_ < 1) {
    throw std::invalid_argument("EmpiricalModel: S, A, H must be positive");
  }
  pairs_.assign(std::size_t(H_) * S_ * A_, 0);
  triples_.assign(std::size_t(H_) * S_ * A_ * S_, 0);
}

std::size_t EmpiricalModel::pair_index(int h, int s, int a) const {
  if (h < 0 || h >= H_ || s < 0 || s >= S_ || a < 0 || a >= A_) {
    throw std::invalid_argument("EmpiricalModel: index out of range");
  }
  return (std::size_t(h) * S_ + s) * A_ + a;
}

void EmpiricalModel::update_counts(const EpisodeTrace& trace) {
  for (const auto& step : trace) {
    add_observations(step.step, step.state, step.action, step.next_state, 1);
  }
}

void EmpiricalModel::add_observations(int h, int s, int a, int next,
                                      std::int64_t count) {
  const std::size_t p = pair_index(h, s, a);
  if (next < 0 || next >= S_) {
    throw std::invalid_argument("EmpiricalModel: next state out of range");
  }
  if (count < 0) throw std::invalid_argument("EmpiricalModel: negative count");
  pairs_[p] += count;
  triples_[p * S_ + next] += count;
}

std::int64_t EmpiricalModel::pair_count(int h, int s, int a) const {
  return pairs_[pair_index(h, s, a)];
}

std::int64_t EmpiricalModel::triple_count(int h, int s, int a, int next) const {
  if (next < 0 || next >= S_) {
    throw std::invalid_argument("EmpiricalModel: next state out of range");
  }
  return triples_[pair_index(h, s, a) * S_ + next];
}

std::vector<double> EmpiricalModel::p_hat_row(int h, int s, int a) const {
  const std::size_t p = pair_index(h, s, a);
  std::vector<double> row(S_, 0.0);
  const std::int64_t n = pairs_[p];
  if (n == 0) {
    row[0] = 1.0;
    return row;
  }
  for (int j = 0; j < S_; ++j) {
    row[j] = double(triples_[p * S_ + j]) / double(n);
  }
  return row;
}

Kernel EmpiricalModel::p_hat() const {
  Kernel k = empty_kernel(S_, A_, H_);
  for (int h = 0; h < H_; ++h) {
    for (int s = 0; s < S_; ++s) {
      for (int a = 0; a < A_; ++a) {
        k[h][s][a] = p_hat_row(h, s, a);
      }
    }
  }
  return k;
}

MixtureMin min_mixture_cdf(std::span<const double> p_hat, double rad,
                           std::span<const double> f_values) {
  if (p_hat.size() != f_values.size() || p_hat.empty()) {
    throw std::invalid_argument("min_mixture_cdf: dimension mismatch");
  }
  if (rad < 0.0) {
    throw std::invalid_argument("min_mixture_cdf: negative radius");
  }
  double total = 0.0;
  for (double v : p_hat) {
    if (v < -FiniteDist::kProbTol) {
      throw std::invalid_argument("min_mixture_cdf: negative probability");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("min_mixture_cdf: center off the simplex");
  }

  const std::size_t n = p_hat.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return f_values[i] != f_values[j] ? f_values[i] < f_values[j] : i < j;
  });

  MixtureMin out;
  out.minimizer.assign(p_hat.begin(), p_hat.end());
  const std::size_t receiver = order.front();
  double add = std::min(rad / 2.0, std::max(0.0, 1.0 - out.minimizer[receiver]));
  out.minimizer[receiver] += add;
  for (std::size_t k = n; k-- > 1 && add > 0.0;) {
    const std::size_t donor = order[k];
    const double take = std::min(out.minimizer[donor], add);
    out.minimizer[donor] -= take;
    add -= take;
  }

  out.value = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.value += out.minimizer[i] * f_values[i];
  return out;
}

OptimisticPlan optimistic_plan(const EmpiricalModel& em, const ConfidenceSpec& spec,
                               const Rewards& rewards, double tau) {
  const int S = em.num_states();
  const int A = em.num_actions();
  const int H = em.horizon();
  check_rewards_shape(rewards, S, A, H);

  OptimisticPlan plan;
  plan.table.dists.resize(H + 1);
  plan.table.dists[H].assign(S, FiniteDist::dirac(0.0));
  plan.policy = MarkovPolicy::zeros(H, S);
  plan.representative = empty_kernel(S, A, H);

  for (int h = H - 1; h >= 0; --h) {
    const StageContext ctx = make_stage_context(plan.table.dists[h + 1]);
    plan.table.dists[h].reserve(S);
    for (int s = 0; s < S; ++s) {
      std::vector<FiniteDist> per_action;
      per_action.reserve(A);
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const auto row = em.p_hat_row(h, s, a);
        const double rad = radius(spec, em.pair_count(h, s, a));
        ActionBackup backup = backup_action(row, rad, ctx, rewards[h][s][a], tau);
        const double value = backup.dist.quantile(tau);
        if (value > best) {
          best = value;
          best_a = a;
        }
        plan.representative[h][s][a] = std::move(backup.rep_row);
        per_action.push_back(std::move(backup.dist));
      }
      plan.policy.actions[h][s] = best_a;
      plan.table.dists[h].push_back(upper_envelope(per_action));
    }
  }
  return plan;
}

OptimisticPlan optimistic_plan_brute(const EmpiricalModel& em,
                                     const ConfidenceSpec& spec,
                                     const Rewards& rewards, double tau,
                                     int start_state) {
  const int S = em.num_states();
  const int A = em.num_actions();
  const int H = em.horizon();
  check_rewards_shape(rewards, S, A, H);
  if (start_state < 0 || start_state >= S) {
    throw std::invalid_argument("optimistic_plan_brute: start state out of range");
  }
  if (!policy_count(S, A, H)) {
    throw std::invalid_argument("optimistic_plan_brute: instance too large to enumerate");
  }

  // Optimistic evaluation of one fixed policy: the stage backup follows the
  // policy's action and minimizes the continuation CDF over that cell's ball.
  const auto evaluate = [&](const MarkovPolicy& pol) {
    std::vector<std::vector<FiniteDist>> dists(H + 1);
    dists[H].assign(S, FiniteDist::dirac(0.0));
    for (int h = H - 1; h >= 0; --h) {
      const StageContext ctx = make_stage_context(dists[h + 1]);
      dists[h].reserve(S);
      for (int s = 0; s < S; ++s) {
        const int a = pol.at(h, s);
        const auto row = em.p_hat_row(h, s, a);
        const double rad = radius(spec, em.pair_count(h, s, a));
        dists[h].push_back(
            backup_action(row, rad, ctx, rewards[h][s][a], tau).dist);
      }
    }
    return dists;
  };

  MarkovPolicy pol = MarkovPolicy::zeros(H, S);
  MarkovPolicy best_pol = pol;
  double best = -std::numeric_limits<double>::infinity();
  do {
    const double v = evaluate(pol)[0][start_state].quantile(tau);
    if (v > best) {
      best = v;
      best_pol = pol;
    }
  } while (next_policy(pol, A));

  OptimisticPlan plan;
  plan.policy = best_pol;
  plan.table.dists = evaluate(best_pol);
  plan.representative = empty_kernel(S, A, H);
  for (int h = H - 1; h >= 0; --h) {
    const StageContext ctx = make_stage_context(plan.table.dists[h + 1]);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const auto row = em.p_hat_row(h, s, a);
        const double rad = radius(spec, em.pair_count(h, s, a));
        plan.representative[h][s][a] =
            backup_action(row, rad, ctx, rewards[h][s][a], tau).rep_row;
      }
    }
  }
  return plan;
}

double margin_kappa(const TabularMDP& m) {
  if (!policy_count(m.num_states, m.num_actions, m.horizon)) {
    throw std::invalid_argument("margin_kappa: more than " +
                                std::to_string(kPolicyEnumerationCap) +
                                " policies, instance too large to enumerate");
  }
  auto violations = validate(m);
  if (!violations.empty()) {
    throw ValidationError("margin_kappa", std::move(violations));
  }

  double kappa = 1.0;
  MarkovPolicy pol = MarkovPolicy::zeros(m.horizon, m.num_states);
  do {
    const ValueTable table = eval_policy(m.kernel, m.rewards, pol);
    for (int h = 0; h < m.horizon; ++h) {
      for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
          const FiniteDist z = mix(m.kernel[h][s][a], table.dists[h + 1]);
          kappa = std::min(
              kappa, *std::min_element(z.masses().begin(), z.masses().end()));
        }
      }
    }
  } while (next_policy(pol, m.num_actions));
  return kappa;
}

std::vector<double> regret_bound(const ConfidenceSpec& spec, double kappa,
                                 std::span<const int> t_axis) {
  if (!(kappa > 0.0) || kappa > 1.0) {
    throw std::invalid_argument("regret_bound: kappa outside (0, 1]");
  }
  const double two_over_kappa = 2.0 / kappa;
  const double H = spec.H;
  const double geometric = 2.0 * (1.0 - std::pow(kappa / 2.0, 2.0 * H)) /
                           (4.0 / (kappa * kappa) - 1.0);

  std::vector<double> out;
  out.reserve(t_axis.size());
  for (int t : t_axis) {
    if (t < 1) throw std::invalid_argument("regret_bound: episode count must be >= 1");
    const double cells = double(spec.S) * spec.A * t * spec.H;
    const double log_term = std::log(2.0 * cells / spec.delta);
    const double first =
        2.0 * spec.c * H * std::pow(two_over_kappa, H) * std::sqrt(cells * log_term);
    const double second = std::pow(two_over_kappa, H + 1.0) * H *
                          std::sqrt(geometric * t * std::log(2.0 / spec.delta));
    out.push_back(first + second);
  }
  return out;
}

}  // namespace ucbqrl
