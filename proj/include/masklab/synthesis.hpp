#pragma once

#include <string>

#include "masklab/lp.hpp"
#include "masklab/world.hpp"

namespace masklab {

enum class PolicyFamily { Exploit, Fair, Mask, MaskWithFair };

const char* to_string(PolicyFamily family) noexcept;
PolicyFamily parse_family(const std::string& name);

struct SolvedPolicy {
  Policy policy;
  PolicyReport report;
  LpStatus status = LpStatus::Optimal;
};

/// Budget-constrained greedy fill: cells sorted by reward descending, the
/// marginal cell fractional. Ties break on the lowest (x, p) index.
SolvedPolicy solve_exploit(const WorldModel& model);

/// eps_fair = 0 uses the closed-form water filling over strata ordered by
/// average reward; eps_fair > 0 solves the banded LP.
SolvedPolicy solve_fair(const WorldModel& model, double eps_fair);

/// LP with |ATE| <= eps_mask, participation = rho, box bounds.
SolvedPolicy solve_mask(const WorldModel& model, double eps_mask);

/// LP with ATE = 0 plus per-stratum bands at eps_fair.
SolvedPolicy solve_mask_with_fair(const WorldModel& model, double eps_fair);

/// Dispatch on family; eps is ignored for Exploit.
SolvedPolicy solve_family(const WorldModel& model, PolicyFamily family, double eps);

// LP formulations of the same problems, used as cross-checking oracles.
BoundedLinearProgram exploit_program(const WorldModel& model);
BoundedLinearProgram fair_program(const WorldModel& model, double eps_fair);
BoundedLinearProgram mask_program(const WorldModel& model, double eps_mask);
BoundedLinearProgram mask_with_fair_program(const WorldModel& model, double eps_fair);

struct NormalizationAnchors {
  double w_fair0 = 0.0;
  double w_exploit = 0.0;
};
NormalizationAnchors normalization_anchors(const WorldModel& model);

/// Maps w onto [0, 1] between the perfectly fair optimum (0) and the
/// unconstrained optimum (1). Throws DegenerateNormalization when the two
/// anchors are closer than 1e-12.
double normalized_performance(const NormalizationAnchors& anchors, double w);
double normalized_performance(const WorldModel& model, double w);

}  // namespace masklab
