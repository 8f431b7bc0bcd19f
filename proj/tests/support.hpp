#pragma once

#include <string>
#include <vector>

#include "masklab/world.hpp"

namespace masklab::testing {

// Two-department admissions example: two strata, heavy group imbalance
// across strata, heterogeneous rewards. Small enough to verify every
// quantity by hand.
inline WorldModel example_world() {
  Cells pi{{1.0 / 15, 9.0 / 15}, {4.0 / 15, 1.0 / 15}};
  Cells gamma{{0.5, 0.5}, {0.25, 1.0}};
  return make_world(std::move(pi), std::move(gamma), 0.1);
}

// The hand-built masking policy for example_world: offsets the two strata
// so the average disparity cancels exactly.
inline Policy masking_policy() {
  Policy policy;
  policy.alpha = {{0.5, 0.0}, {0.0, 1.0}};
  return policy;
}

// Participates only with group 1 in stratum 1; maximal average disparity.
inline Policy targeted_exploit_policy() {
  Policy policy;
  policy.alpha = {{0.0, 0.0}, {0.0, 1.0}};
  return policy;
}

// The water-filling fair optimum for example_world.
inline Policy fair_example_policy() {
  Policy policy;
  policy.alpha = {{0.15, 0.15}, {0.0, 0.0}};
  return policy;
}

// Product-form pi and strata-constant gamma: no confounding, no
// heterogeneity.
inline WorldModel independent_homogeneous_world() {
  double p1 = 0.3;
  std::vector<double> px{0.55, 0.25, 0.2};
  Cells pi, gamma;
  for (double p : px) {
    pi.push_back({p * (1.0 - p1), p * p1});
    gamma.push_back({0.4, 0.8});
  }
  return make_world(std::move(pi), std::move(gamma), 0.15);
}

}  // namespace masklab::testing
