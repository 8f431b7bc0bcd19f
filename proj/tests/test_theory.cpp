#include <doctest.h>

#include <cmath>

#include "masklab/rng.hpp"
#include "masklab/synthesis.hpp"
#include "masklab/theory.hpp"
#include "support.hpp"

using namespace masklab;
using masklab::testing::example_world;
using masklab::testing::independent_homogeneous_world;

TEST_CASE("arbitrage rate on the worked example") {
  CHECK(arbitrage_rate(example_world(), 0, 1, 1) == doctest::Approx(5.0 / 6).epsilon(1e-12));
}

TEST_CASE("arbitrage rate collapses to the average reward without dependence") {
  WorldModel model = independent_homogeneous_world();
  ContextRewards rewards = context_weighted_rewards(model);
  for (int j = 1; j < model.k; ++j)
    for (int p = 0; p < 2; ++p)
      CHECK(arbitrage_rate(model, 0, j, p) == doctest::Approx(rewards.w_avg[0]).epsilon(1e-12));
}

TEST_CASE("constant rewards pin the arbitrage rate") {
  WorldModel flat = make_world({{0.1, 0.2}, {0.4, 0.3}}, {{0.35, 0.35}, {0.35, 0.35}}, 0.2);
  CHECK(arbitrage_rate(flat, 0, 1, 0) == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(arbitrage_rate(flat, 0, 1, 1) == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("arbitrage rate rejects identical strata and bad indices") {
  CHECK_THROWS_AS(arbitrage_rate(example_world(), 1, 1, 0), Error);
  CHECK_THROWS_AS(arbitrage_rate(example_world(), 0, 5, 0), Error);
}

TEST_CASE("arbitrage rate is a mediant of the two per-unit returns") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    WorldModel model = sample_world(3, 0.2, 3100 + seed);
    Cells prop = propensity(model);
    for (int p = 0; p < 2; ++p) {
      int q = 1 - p;
      double r = arbitrage_rate(model, 0, 1, p);
      double unit_i = model.gamma[0][q];  // w / propensity
      double unit_j = model.gamma[1][p];
      CHECK(r >= std::min(unit_i, unit_j) - 1e-12);
      CHECK(r <= std::max(unit_i, unit_j) + 1e-12);
    }
  }
}

TEST_CASE("gap lower bound on the worked example is tight") {
  WorldModel model = example_world();
  double bound = gap_lower_bound(model);
  CHECK(bound == doctest::Approx(1.0 / 30).epsilon(1e-10));
  double gap = solve_mask(model, 0.0).report.objective - solve_fair(model, 0.0).report.objective;
  CHECK(bound == doctest::Approx(gap).epsilon(1e-9));
}

TEST_CASE("gap lower bound vanishes without dependence") {
  CHECK(gap_lower_bound(independent_homogeneous_world()) ==
        doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("gap lower bound refuses large budgets") {
  WorldModel model = example_world();
  model.rho = 0.7;  // exceeds the best stratum's mass of 2/3
  CHECK_THROWS_AS(gap_lower_bound(model), Error);
}

TEST_CASE("gap lower bound never exceeds the solved gap at small budgets") {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 500; ++seed) {
    WorldModel model = sample_world(2 + static_cast<int>(seed % 2), 0.05, 5200 + seed);
    double bound;
    try {
      bound = gap_lower_bound(model);
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::RhoTooLarge);
      continue;
    }
    ++checked;
    CHECK(bound >= 0.0);
    double gap = solve_mask(model, 0.0).report.objective - solve_fair(model, 0.0).report.objective;
    CHECK(bound <= gap + 1e-9);
  }
}

TEST_CASE("dependence diagnostics") {
  DependenceDiagnostics none = dependence_diagnostics(independent_homogeneous_world());
  CHECK(none.confounding == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(none.heterogeneity == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  DependenceDiagnostics diag = dependence_diagnostics(example_world());
  // Stratum 0 deviates by |9/10 - 2/3| = 7/30; the max over all cells is
  // stratum 1's |4/5 - 1/3| = 7/15.
  CHECK(diag.confounding == doctest::Approx(7.0 / 15).epsilon(1e-12));
  CHECK(diag.heterogeneity == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero diagnostics imply equal optima") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    WorldModel model =
        sample_world_with_mode(3, 0.25, WorldMode::IndependentHomogeneous, 6100 + seed);
    DependenceDiagnostics diag = dependence_diagnostics(model);
    CHECK(diag.confounding <= 1e-12);
    CHECK(diag.heterogeneity <= 1e-12);
    double gap = solve_mask(model, 0.0).report.objective - solve_fair(model, 0.0).report.objective;
    CHECK(std::abs(gap) <= 1e-9);
  }
}

TEST_CASE("mode samplers force exactly the advertised dependencies") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    WorldModel conf = sample_world_with_mode(3, 0.2, WorldMode::ConfoundedOnly, 6200 + seed);
    DependenceDiagnostics dc = dependence_diagnostics(conf);
    CHECK(dc.heterogeneity <= 1e-12);
    CHECK(dc.confounding > 1e-6);

    WorldModel het = sample_world_with_mode(3, 0.2, WorldMode::HeterogeneousOnly, 6300 + seed);
    DependenceDiagnostics dh = dependence_diagnostics(het);
    CHECK(dh.confounding <= 1e-12);
    CHECK(dh.heterogeneity > 1e-6);
  }
}

TEST_CASE("genericity experiment frequencies at desk scale") {
  GenericitySummary none =
      genericity_experiment(2, 0.25, 200, WorldMode::IndependentHomogeneous, 71, 2);
  CHECK(none.frac_gap_positive == 0.0);

  // A positive gap needs a stratum that beats the fair pick somewhere; at
  // small k the fair pick often dominates cell-wise, so the frequency only
  // approaches 1 as k grows.
  GenericitySummary het2 = genericity_experiment(2, 0.25, 300, WorldMode::HeterogeneousOnly, 72, 2);
  CHECK(het2.frac_gap_positive > 0.30);
  CHECK(het2.frac_gap_positive < 0.70);
  GenericitySummary het20 =
      genericity_experiment(20, 0.25, 300, WorldMode::HeterogeneousOnly, 72, 2);
  CHECK(het20.frac_gap_positive >= 0.98);

  // Rewards constant across strata make the masked optimum collapse onto the
  // fair one: balancing the average forces the fair group mix exactly.
  GenericitySummary conf = genericity_experiment(5, 0.25, 200, WorldMode::ConfoundedOnly, 75, 2);
  CHECK(conf.frac_gap_positive == 0.0);

  GenericitySummary free = genericity_experiment(2, 0.25, 300, WorldMode::Free, 73, 2);
  CHECK(free.frac_exploit_fair < 0.02);
  CHECK(free.frac_exploit_masked < 0.02);
  CHECK(free.n_worlds == 300);
  GenericitySummary free20 = genericity_experiment(20, 0.25, 300, WorldMode::Free, 73, 2);
  CHECK(free20.frac_mask_fair < 0.05);
}

TEST_CASE("genericity experiment is independent of the worker count") {
  GenericitySummary serial = genericity_experiment(2, 0.25, 100, WorldMode::Free, 74, 1);
  GenericitySummary parallel = genericity_experiment(2, 0.25, 100, WorldMode::Free, 74, 4);
  CHECK(serial.frac_gap_positive == parallel.frac_gap_positive);
  CHECK(serial.frac_exploit_fair == parallel.frac_exploit_fair);
  CHECK(serial.frac_exploit_masked == parallel.frac_exploit_masked);
  CHECK(serial.frac_mask_fair == parallel.frac_mask_fair);
}

TEST_CASE("volume estimates") {
  WorldModel model = sample_world(2, 0.25, 81);
  CHECK(feasible_volume_estimate(model, ConstraintFamily::Fair, 1.0, 20000, 82) == 1.0);

  // The stratum bands imply the averaged band, never the reverse.
  for (double eps : {0.05, 0.2}) {
    double fair = feasible_volume_estimate(model, ConstraintFamily::Fair, eps, 50000, 83);
    double mask = feasible_volume_estimate(model, ConstraintFamily::Mask, eps, 50000, 83);
    CHECK(fair <= mask);
  }

  // Acceptance of the k independent bands factorizes: (2e - e^2)^k exactly.
  double eps = 0.1;
  double expected = std::pow(2 * eps - eps * eps, 2);
  double estimate = feasible_volume_estimate(model, ConstraintFamily::Fair, eps, 200000, 84);
  CHECK(estimate == doctest::Approx(expected).epsilon(0.05));

  CHECK(feasible_volume_estimate(model, ConstraintFamily::Mask, 0.1, 100000, 85, 4) ==
        feasible_volume_estimate(model, ConstraintFamily::Mask, 0.1, 100000, 85, 1));
}
