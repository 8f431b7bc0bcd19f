#include <doctest.h>

#include <cmath>

#include "masklab/lp.hpp"
#include "masklab/synthesis.hpp"
#include "support.hpp"

using namespace masklab;
using masklab::testing::example_world;

TEST_CASE("greedy exploit on the worked example") {
  WorldModel model = example_world();
  SolvedPolicy exploit = solve_exploit(model);
  CHECK(exploit.report.objective == doctest::Approx(1.0 / 12).epsilon(1e-10));
  // Best cell saturated, the tied 0.5-reward cell with the lower index half-filled.
  CHECK(exploit.policy.alpha[1][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exploit.policy.alpha[0][0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(exploit.policy.alpha[0][1] == 0.0);
  CHECK(exploit.report.participation == doctest::Approx(model.rho).epsilon(1e-10));
}

TEST_CASE("exploit with a full budget saturates everything") {
  WorldModel model = example_world();
  model.rho = 1.0;
  SolvedPolicy exploit = solve_exploit(model);
  double everything = 0.0;
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) {
      CHECK(exploit.policy.alpha[x][p] == doctest::Approx(1.0).epsilon(1e-9));
      everything += model.gamma[x][p] * model.pi[x][p];
    }
  CHECK(exploit.report.objective == doctest::Approx(everything).epsilon(1e-12));
}

TEST_CASE("water-filling fair optimum on the worked example") {
  SolvedPolicy fair = solve_fair(example_world(), 0.0);
  CHECK(fair.report.objective == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(fair.policy.alpha[0][0] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(fair.policy.alpha[0][1] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(fair.policy.alpha[1][0] == 0.0);
  CHECK(fair.policy.alpha[1][1] == 0.0);
  CHECK(fair.report.max_abs_cate <= 1e-12);
}

TEST_CASE("a vacuous band reduces fair to exploit") {
  WorldModel model = example_world();
  CHECK(solve_fair(model, 2.0).report.objective ==
        doctest::Approx(solve_exploit(model).report.objective).epsilon(1e-9));
}

TEST_CASE("closed forms match the general solver") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    WorldModel model = sample_world(1 + static_cast<int>(seed % 6), 0.2, 900 + seed);
    double greedy = solve_exploit(model).report.objective;
    double lp_exploit = solve_lp(exploit_program(model)).objective_value;
    CHECK(greedy == doctest::Approx(lp_exploit).epsilon(1e-9).scale(1.0));

    double filled = solve_fair(model, 0.0).report.objective;
    double lp_fair = solve_lp(fair_program(model, 0.0)).objective_value;
    CHECK(filled == doctest::Approx(lp_fair).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("masking optimum on the worked example") {
  SolvedPolicy mask = solve_mask(example_world(), 0.0);
  CHECK(mask.report.objective == doctest::Approx(1.0 / 12).epsilon(1e-10));
  CHECK(std::abs(mask.report.ate) <= 1e-9);
}

TEST_CASE("a vacuous average bound reduces mask to exploit") {
  WorldModel model = example_world();
  CHECK(solve_mask(model, 1.0).report.objective ==
        doctest::Approx(solve_exploit(model).report.objective).epsilon(1e-9));
}

TEST_CASE("feasible-set containment on sampled worlds") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    WorldModel model = sample_world(2 + static_cast<int>(seed % 4), 0.25, 1300 + seed);
    double w_fair = solve_fair(model, 0.0).report.objective;
    double w_mask = solve_mask(model, 0.0).report.objective;
    double w_exploit = solve_exploit(model).report.objective;
    CHECK(w_fair <= w_mask + 1e-9);
    CHECK(w_mask <= w_exploit + 1e-9);
  }
}

TEST_CASE("solved policies hit the budget exactly and honor their constraints") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    WorldModel model = sample_world(2 + static_cast<int>(seed % 3), 0.3, 4200 + seed);
    for (double eps : {0.0, 0.1}) {
      SolvedPolicy fair = solve_fair(model, eps);
      SolvedPolicy mask = solve_mask(model, eps);
      CHECK(fair.report.participation == doctest::Approx(model.rho).epsilon(1e-9).scale(1.0));
      CHECK(mask.report.participation == doctest::Approx(model.rho).epsilon(1e-9).scale(1.0));
      CHECK(fair.report.max_abs_cate <= eps + 1e-9);
      CHECK(std::abs(mask.report.ate) <= eps + 1e-9);
    }
    SolvedPolicy exploit = solve_exploit(model);
    CHECK(exploit.report.participation == doctest::Approx(model.rho).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("mask with fair bands interpolates between the two optima") {
  WorldModel model = example_world();
  CHECK(solve_mask_with_fair(model, 0.0).report.objective ==
        doctest::Approx(solve_fair(model, 0.0).report.objective).epsilon(1e-9).scale(1.0));
  CHECK(solve_mask_with_fair(model, 1.0).report.objective ==
        doctest::Approx(solve_mask(model, 0.0).report.objective).epsilon(1e-9).scale(1.0));

  double previous = -1.0;
  for (double eps = 0.0; eps <= 1.0 + 1e-12; eps += 0.1) {
    double objective = solve_mask_with_fair(model, eps).report.objective;
    CHECK(objective >= previous - 1e-9);
    previous = objective;
  }
}

TEST_CASE("normalized performance anchors") {
  WorldModel model = example_world();
  NormalizationAnchors anchors = normalization_anchors(model);
  CHECK(normalized_performance(anchors, anchors.w_fair0) == doctest::Approx(0.0));
  CHECK(normalized_performance(anchors, anchors.w_exploit) == doctest::Approx(1.0));
  // Exploit and mask coincide on this world, so 1/12 maps to the top anchor.
  CHECK(normalized_performance(model, 1.0 / 12) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("zero-gap worlds are flagged as degenerate") {
  // Constant rewards: every policy with the same budget earns the same.
  WorldModel flat = make_world({{0.2, 0.3}, {0.1, 0.4}}, {{0.6, 0.6}, {0.6, 0.6}}, 0.2);
  CHECK_THROWS_AS(normalized_performance(flat, 0.1), Error);
}

TEST_CASE("family names round-trip") {
  for (PolicyFamily family : {PolicyFamily::Exploit, PolicyFamily::Fair, PolicyFamily::Mask,
                              PolicyFamily::MaskWithFair})
    CHECK(parse_family(to_string(family)) == family);
  CHECK_THROWS_AS(parse_family("nonsense"), Error);
}
