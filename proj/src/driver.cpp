#include "ucbqrl/driver.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ucbqrl/qdp.hpp"
#include "ucbqrl/rng.hpp"

namespace ucbqrl {

namespace {

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += std::abs(a[i] - b[i]);
  return out;
}

}  // namespace

std::vector<RegretRecord> run(const TabularMDP& m, const ExperimentConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) {
    throw std::invalid_argument("run: tau outside (0, 1)");
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("run: delta outside (0, 1)");
  }
  if (cfg.episodes < 1) throw std::invalid_argument("run: episodes must be >= 1");
  auto violations = validate(m);
  if (!violations.empty()) throw ValidationError("run", std::move(violations));

  const int S = m.num_states;
  const int A = m.num_actions;
  const int H = m.horizon;
  const int T = cfg.episodes;

  const ValueTable star_table = qmdp_plan(m.kernel, m.rewards);
  const double v_star = star_table.at(0, m.start_state).quantile(cfg.tau);

  const bool enumerable = policy_count(S, A, H).has_value();
  if (enumerable) {
    const BruteForceResult bf = brute_force_best(m, cfg.tau);
    if (std::abs(bf.value - v_star) > 1e-9) {
      std::ostringstream os;
      os << "run: planner optimum " << format_double(v_star)
         << " and enumeration optimum " << format_double(bf.value)
         << " disagree at tau=" << format_double(cfg.tau)
         << "; refusing to account regret against an ambiguous optimum";
      throw std::runtime_error(os.str());
    }
  }

  std::vector<double> bounds(T, std::numeric_limits<double>::quiet_NaN());
  const ConfidenceSpec spec = ConfidenceSpec::make(cfg.delta, cfg.tau, S, A, T, H);
  if (enumerable) {
    const double kappa = margin_kappa(m);
    std::vector<int> axis(T);
    std::iota(axis.begin(), axis.end(), 1);
    bounds = regret_bound(spec, kappa, axis);
  }

  EmpiricalModel em(S, A, H);
  MarkovPolicy policy = MarkovPolicy::zeros(H, S);

  std::vector<RegretRecord> records;
  records.reserve(T);
  double cum_regret = 0.0;
  for (int t = 0; t < T; ++t) {
    const EpisodeTrace trace = simulate_episode(m, policy, derive_seed(cfg.seed, t));
    const double v_pi =
        eval_policy(m.kernel, m.rewards, policy).at(0, m.start_state).quantile(cfg.tau);
    em.update_counts(trace);

    const OptimisticPlan plan =
        cfg.planner_mode == PlannerMode::envelope
            ? optimistic_plan(em, spec, m.rewards, cfg.tau)
            : optimistic_plan_brute(em, spec, m.rewards, cfg.tau, m.start_state);

    RegretRecord rec;
    rec.episode = t;
    rec.v_star = v_star;
    rec.v_pi_t = v_pi;
    rec.optimistic_value = plan.table.at(0, m.start_state).quantile(cfg.tau);
    rec.regret_t = v_star - v_pi;
    cum_regret += rec.regret_t;
    rec.cum_regret = cum_regret;
    rec.bound_t = bounds[t];
    rec.representative_value = eval_policy(plan.representative, m.rewards, plan.policy)
                                   .at(0, m.start_state)
                                   .quantile(cfg.tau);

    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          ++rec.conf_cells;
          const double dist = l1_distance(m.kernel[h][s][a], em.p_hat_row(h, s, a));
          if (dist > radius(spec, em.pair_count(h, s, a)) + 1e-12) {
            ++rec.conf_violations;
          }
        }
      }
    }
    rec.confidence_event_ok = rec.conf_violations == 0;
    rec.planned_policy = plan.policy;

    records.push_back(std::move(rec));
    policy = plan.policy;
  }
  return records;
}

std::vector<RegretRecord> run(const ExperimentConfig& cfg) {
  const TabularMDP m = read_mdp(cfg.mdp_path);
  auto records = run(m, cfg);
  if (!cfg.output_path.empty()) {
    write_records(records, cfg.output_path);
  }
  return records;
}

double weissman_mc(std::span<const double> p, int n, double eps, int trials,
                   std::uint64_t seed) {
  if (trials < 1000) {
    throw std::invalid_argument("weissman_mc: need at least 1000 trials");
  }
  if (n < 1) throw std::invalid_argument("weissman_mc: sample size must be >= 1");
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("weissman_mc: negative probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("weissman_mc: p off the simplex");
  }

  const std::size_t S = p.size();
  int exceed = 0;
  std::vector<double> counts(S);
  for (int trial = 0; trial < trials; ++trial) {
    CounterRng rng(seed, static_cast<std::uint64_t>(trial));
    std::fill(counts.begin(), counts.end(), 0.0);
    for (int k = 0; k < n; ++k) {
      const double u = rng.next_unit_open_closed();
      double acc = 0.0;
      std::size_t pick = S - 1;
      for (std::size_t i = 0; i < S; ++i) {
        acc += p[i];
        if (u <= acc) {
          pick = i;
          break;
        }
      }
      counts[pick] += 1.0;
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i < S; ++i) l1 += std::abs(counts[i] / n - p[i]);
    if (l1 >= eps) ++exceed;
  }
  return double(exceed) / trials;
}

std::string format_double(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_records(std::span<const RegretRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_records: cannot open " + path);
  out << "episode,v_star,v_pi_t,optimistic_value,regret_t,cum_regret,bound_t,"
         "confidence_event_ok\n";
  for (const auto& r : records) {
    out << r.episode << ',' << format_double(r.v_star) << ','
        << format_double(r.v_pi_t) << ',' << format_double(r.optimistic_value) << ','
        << format_double(r.regret_t) << ',' << format_double(r.cum_regret) << ','
        << format_double(r.bound_t) << ',' << (r.confidence_event_ok ? 1 : 0)
        << '\n';
  }
  if (!out) throw std::runtime_error("write_records: failed writing " + path);
}

}  // namespace ucbqrl
