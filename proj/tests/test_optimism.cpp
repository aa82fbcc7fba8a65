#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "ucbqrl/optimism.hpp"
#include "ucbqrl/qdp.hpp"
#include "ucbqrl/rng.hpp"

using namespace ucbqrl;
using testutil::random_simplex;

namespace {

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += std::abs(a[i] - b[i]);
  return out;
}

using testutil::margin_oracle;

EmpiricalModel model_from_kernel(const TabularMDP& m, std::int64_t per_cell) {
  EmpiricalModel em(m.num_states, m.num_actions, m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    for (int s = 0; s < m.num_states; ++s) {
      for (int a = 0; a < m.num_actions; ++a) {
        for (int j = 0; j < m.num_states; ++j) {
          const auto c =
              static_cast<std::int64_t>(std::llround(m.kernel[h][s][a][j] * per_cell));
          if (c > 0) em.add_observations(h, s, a, j, c);
        }
      }
    }
  }
  return em;
}

}  // namespace

TEST_CASE("confidence constant and radius follow the pinned formulas") {
  const ConfidenceSpec spec = ConfidenceSpec::make(0.1, 0.5, 2, 2, 10, 2);
  // S*A*T*H = 80: both logs evaluate at 1600, so c collapses to sqrt(2).
  CHECK(spec.c == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  CHECK(radius(spec, 0) == radius(spec, 1));
  CHECK(radius(spec, 4) == doctest::Approx(radius(spec, 1) / 2.0).epsilon(1e-12));
  CHECK(radius(spec, 100) < radius(spec, 10));

  CHECK_THROWS_AS(ConfidenceSpec::make(0.0, 0.5, 2, 2, 10, 2), std::invalid_argument);
  CHECK_THROWS_AS(ConfidenceSpec::make(0.1, 1.0, 2, 2, 10, 2), std::invalid_argument);
  CHECK_THROWS_AS(radius(spec, -1), std::invalid_argument);
}

TEST_CASE("the empty-cell radius always covers the simplex") {
  CounterRng rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfidenceSpec spec = ConfidenceSpec::make(
        0.001 + 0.998 * rng.next_unit(), 0.5, 1 + int(rng.next_below(6)),
        1 + int(rng.next_below(4)), 1 + int(rng.next_below(1000)),
        1 + int(rng.next_below(6)));
    CHECK(radius(spec, 0) >= 2.0 - 1e-12);
  }
}

TEST_CASE("count updates accumulate one increment per visited step") {
  const TabularMDP m = testutil::risky_safe_instance();
  EmpiricalModel em(3, 2, 2);
  const EpisodeTrace trace = simulate_episode(m, MarkovPolicy::zeros(2, 3), 0);

  em.update_counts(trace);
  int nonzero = 0;
  for (int h = 0; h < 2; ++h) {
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) nonzero += em.pair_count(h, s, a) > 0;
    }
  }
  CHECK(nonzero == 2);
  CHECK(em.pair_count(0, 0, 0) == 1);
  CHECK(em.triple_count(0, 0, 0, 2) == 1);

  em.update_counts(trace);
  CHECK(em.pair_count(0, 0, 0) == 2);
  CHECK(em.triple_count(0, 0, 0, 2) == 2);

  // Pair count equals the sum of its triple counts after any sequence.
  CounterRng rng(9);
  MarkovPolicy pol = MarkovPolicy::zeros(2, 3);
  for (int t = 0; t < 25; ++t) {
    pol.actions[0][0] = int(rng.next_below(2));
    em.update_counts(simulate_episode(m, pol, derive_seed(77, t)));
  }
  for (int h = 0; h < 2; ++h) {
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        std::int64_t total = 0;
        for (int j = 0; j < 3; ++j) total += em.triple_count(h, s, a, j);
        CHECK(total == em.pair_count(h, s, a));
      }
    }
  }

  // Zero-count rows use the all-mass-on-state-0 convention.
  CHECK(em.p_hat_row(1, 0, 1) == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("min_mixture_cdf solves the l1-ball linear program") {
  SUBCASE("degenerate ball returns the center") {
    const std::vector<double> p = {0.25, 0.75};
    const std::vector<double> f = {0.9, 0.1};
    const MixtureMin out = min_mixture_cdf(p, 0.0, f);
    CHECK(out.minimizer == p);
    CHECK(out.value == doctest::Approx(0.25 * 0.9 + 0.75 * 0.1).epsilon(1e-12));
  }

  SUBCASE("worked two-state example") {
    const MixtureMin out = min_mixture_cdf(std::vector<double>{0.5, 0.5}, 0.4,
                                           std::vector<double>{0.8, 0.2});
    CHECK(out.minimizer[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(out.minimizer[1] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(out.value == doctest::Approx(0.38).epsilon(1e-12));
  }

  SUBCASE("a radius of 2 reaches the best vertex") {
    const MixtureMin out = min_mixture_cdf(std::vector<double>{0.2, 0.3, 0.5}, 2.0,
                                           std::vector<double>{0.7, 0.1, 0.4});
    CHECK(out.minimizer[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.minimizer[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(out.minimizer[2]) < 1e-12);
    CHECK(out.value == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("matches exhaustive vertex search and stays feasible") {
    CounterRng rng(2024);
    for (int trial = 0; trial < 150; ++trial) {
      const int S = 1 + static_cast<int>(rng.next_below(4));
      const auto p = random_simplex(rng, S);
      std::vector<double> f(S);
      for (double& v : f) v = rng.next_unit();
      const double rad = 2.2 * rng.next_unit();
      const MixtureMin out = min_mixture_cdf(p, rad, f);

      CHECK(out.value ==
            doctest::Approx(testutil::lp_vertex_min(p, rad, f)).epsilon(1e-9));

      double mass = 0.0;
      for (double v : out.minimizer) {
        CHECK(v >= -1e-12);
        mass += v;
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(l1(out.minimizer, p) <= rad + 1e-9);
    }
  }

  SUBCASE("rejects bad inputs") {
    CHECK_THROWS_AS(min_mixture_cdf(std::vector<double>{0.5, 0.6}, 0.1,
                                    std::vector<double>{0.1, 0.2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(min_mixture_cdf(std::vector<double>{0.5, 0.5}, -0.1,
                                    std::vector<double>{0.1, 0.2}),
                    std::invalid_argument);
  }
}

TEST_CASE("optimistic_plan collapses to exact planning as data accumulates") {
  const TabularMDP m = gen_random(3, 2, 3, 314, 0.2);
  const EmpiricalModel em = model_from_kernel(m, 1'000'000'000'000'000LL);
  const ConfidenceSpec spec = ConfidenceSpec::make(0.1, 0.37, 3, 2, 100, 3);
  const OptimisticPlan plan = optimistic_plan(em, spec, m.rewards, 0.37);
  const ValueTable exact = qmdp_plan(em.p_hat(), m.rewards);
  for (int h = 0; h < 3; ++h) {
    for (int s = 0; s < 3; ++s) {
      for (double tau : {0.1, 0.25, 0.37, 0.5, 0.75, 0.9}) {
        CHECK(plan.table.at(h, s).quantile(tau) ==
              doctest::Approx(exact.at(h, s).quantile(tau)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("optimistic_plan with no data reaches the best reward path") {
  const TabularMDP m = testutil::risky_safe_instance();
  const EmpiricalModel em(3, 2, 2);
  const ConfidenceSpec spec = ConfidenceSpec::make(0.1, 0.6, 3, 2, 50, 2);
  REQUIRE(radius(spec, 0) >= 2.0);
  const OptimisticPlan plan = optimistic_plan(em, spec, m.rewards, 0.6);
  CHECK(plan.table.at(0, 0).quantile(0.6) ==
        doctest::Approx(testutil::max_path_return(m)).epsilon(1e-12));

  const TabularMDP r = gen_random(3, 2, 3, 2718, 0.2);
  const EmpiricalModel em_r(3, 2, 3);
  const ConfidenceSpec spec_r = ConfidenceSpec::make(0.05, 0.5, 3, 2, 80, 3);
  const OptimisticPlan plan_r = optimistic_plan(em_r, spec_r, r.rewards, 0.5);
  CHECK(plan_r.table.at(0, r.start_state).quantile(0.5) ==
        doctest::Approx(testutil::max_path_return(r)).epsilon(1e-12));
}

TEST_CASE("a single state makes the ball irrelevant") {
  const TabularMDP m = gen_random(1, 3, 3, 4444);
  const ConfidenceSpec spec = ConfidenceSpec::make(0.1, 0.5, 1, 3, 50, 3);
  const EmpiricalModel empty(1, 3, 3);
  const EmpiricalModel full = model_from_kernel(m, 1000);
  const OptimisticPlan a = optimistic_plan(empty, spec, m.rewards, 0.5);
  const OptimisticPlan b = optimistic_plan(full, spec, m.rewards, 0.5);
  const ValueTable exact = qmdp_plan(m.kernel, m.rewards);
  for (int h = 0; h <= 3; ++h) {
    CHECK(a.table.at(h, 0).support() == b.table.at(h, 0).support());
    CHECK(a.table.at(h, 0).support() == exact.at(h, 0).support());
  }
}

TEST_CASE("optimism holds whenever the confidence event does") {
  CounterRng rng(31337);
  int events_held = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const TabularMDP m = gen_random(2 + int(rng.next_below(2)), 2,
                                    1 + int(rng.next_below(3)),
                                    derive_seed(5000, trial), 0.2);
    const ConfidenceSpec spec = ConfidenceSpec::make(
        0.1, 0.5, m.num_states, m.num_actions, 40, m.horizon);
    EmpiricalModel em(m.num_states, m.num_actions, m.horizon);
    MarkovPolicy pol = MarkovPolicy::zeros(m.horizon, m.num_states);
    const double v_star =
        qmdp_plan(m.kernel, m.rewards).at(0, m.start_state).quantile(0.5);
    for (int t = 0; t < 15; ++t) {
      em.update_counts(simulate_episode(m, pol, derive_seed(trial, t)));
      bool event = true;
      for (int h = 0; h < m.horizon && event; ++h) {
        for (int s = 0; s < m.num_states && event; ++s) {
          for (int a = 0; a < m.num_actions && event; ++a) {
            event = l1(m.kernel[h][s][a], em.p_hat_row(h, s, a)) <=
                    radius(spec, em.pair_count(h, s, a)) + 1e-12;
          }
        }
      }
      const OptimisticPlan plan = optimistic_plan(em, spec, m.rewards, 0.5);
      if (event) {
        ++events_held;
        CHECK(plan.table.at(0, m.start_state).quantile(0.5) >= v_star - 1e-9);
      }
      pol = plan.policy;
    }
  }
  CHECK(events_held > 100);
}

TEST_CASE("brute-force planning agrees with the envelope planner") {
  CounterRng rng(808);
  for (int trial = 0; trial < 8; ++trial) {
    const TabularMDP m = gen_random(2, 2, 2, derive_seed(88, trial), 0.25);
    const ConfidenceSpec spec = ConfidenceSpec::make(0.1, 0.6, 2, 2, 30, 2);
    EmpiricalModel em(2, 2, 2);
    MarkovPolicy pol = MarkovPolicy::zeros(2, 2);
    for (int t = 0; t < 6; ++t) {
      em.update_counts(simulate_episode(m, pol, derive_seed(trial, 600 + t)));
    }
    const OptimisticPlan fast = optimistic_plan(em, spec, m.rewards, 0.6);
    const OptimisticPlan slow =
        optimistic_plan_brute(em, spec, m.rewards, 0.6, m.start_state);
    CHECK(fast.table.at(0, m.start_state).quantile(0.6) ==
          doctest::Approx(slow.table.at(0, m.start_state).quantile(0.6))
              .epsilon(1e-9));
  }
}

TEST_CASE("margin_kappa measures the smallest mixture atom") {
  SUBCASE("deterministic kernels have margin 1") {
    TabularMDP m = gen_random(3, 2, 2, 5, 0.2);
    for (auto& stage : m.kernel) {
      for (auto& state : stage) {
        for (auto& row : state) {
          const auto top = std::max_element(row.begin(), row.end());
          std::fill(row.begin(), row.end(), 0.0);
          *top = 1.0;
        }
      }
    }
    CHECK(margin_kappa(m) == 1.0);
  }

  SUBCASE("single state has margin 1") {
    CHECK(margin_kappa(gen_random(1, 2, 3, 6)) == 1.0);
  }

  SUBCASE("half-masses split again give 0.25") {
    TabularMDP m;
    m.num_states = 2;
    m.num_actions = 1;
    m.horizon = 3;
    m.start_state = 0;
    m.rewards = {{{0.0}, {0.0}}, {{0.0}, {0.25}}, {{0.0}, {1.0}}};
    const std::vector<double> coin = {0.5, 0.5};
    const std::vector<double> self0 = {1.0, 0.0};
    const std::vector<double> self1 = {0.0, 1.0};
    m.kernel = {{{coin}, {self1}}, {{coin}, {coin}}, {{self0}, {self1}}};
    REQUIRE(validate(m).empty());
    CHECK(margin_kappa(m) == 0.25);
    CHECK(margin_oracle(m) == 0.25);
  }

  SUBCASE("matches the independent oracle on random instances") {
    for (int trial = 0; trial < 12; ++trial) {
      const TabularMDP m = gen_random(2, 2, 2, derive_seed(404, trial), 0.2);
      CHECK(margin_kappa(m) ==
            doctest::Approx(margin_oracle(m)).epsilon(1e-12));
    }
  }

  SUBCASE("guards against oversized enumeration") {
    CHECK_THROWS_AS(margin_kappa(gen_random(5, 4, 5, 1)), std::invalid_argument);
  }
}

TEST_CASE("regret_bound reproduces the closed-form curve") {
  SUBCASE("domain checks") {
    const ConfidenceSpec spec = ConfidenceSpec::make(0.5, 0.5, 1, 1, 1, 1);
    const std::vector<int> axis = {1};
    CHECK_THROWS_AS(regret_bound(spec, 2.0, axis), std::invalid_argument);
    CHECK_THROWS_AS(regret_bound(spec, 0.0, axis), std::invalid_argument);
  }

  SUBCASE("hand evaluation at S=A=T=H=1, delta=0.5, kappa=1") {
    ConfidenceSpec spec = ConfidenceSpec::make(0.5, 0.5, 1, 1, 1, 1);
    spec.c = 2.0;
    const auto out = regret_bound(spec, 1.0, std::vector<int>{1});
    const double expected =
        8.0 * std::sqrt(std::log(4.0)) + 4.0 * std::sqrt(std::log(4.0) / 2.0);
    CHECK(out[0] == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("doubling T scales the tail term by sqrt(2)") {
    const ConfidenceSpec spec = ConfidenceSpec::make(0.1, 0.5, 3, 2, 400, 3);
    const double kappa = 0.3;
    const auto out = regret_bound(spec, kappa, std::vector<int>{100, 200});
    const auto first_term = [&](int t) {
      const double cells = 3.0 * 2 * t * 3;
      return 2.0 * spec.c * 3 * std::pow(2.0 / kappa, 3) *
             std::sqrt(cells * std::log(2.0 * cells / 0.1));
    };
    const double tail100 = out[0] - first_term(100);
    const double tail200 = out[1] - first_term(200);
    CHECK(tail200 == doctest::Approx(tail100 * std::sqrt(2.0)).epsilon(1e-9));
  }

  SUBCASE("nondecreasing in T") {
    const ConfidenceSpec spec = ConfidenceSpec::make(0.05, 0.5, 2, 2, 1000, 2);
    std::vector<int> axis;
    for (int t = 1; t <= 1000; t += 7) axis.push_back(t);
    const auto out = regret_bound(spec, 0.5, axis);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i] >= out[i - 1]);
  }
}
