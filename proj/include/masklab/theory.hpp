#pragma once

#include <cstdint>
#include <string>

#include "masklab/world.hpp"

namespace masklab {

/// Rate of return of the balanced swap that trades participation between
/// cells (i, 1-p) and (j, p):
/// (w[i][1-p] + w[j][p]) / (Pr(1-p | i) + Pr(p | j)).
double arbitrage_rate(const WorldModel& model, int i, int j, int p);

/// Lower bound rho * max(0, max_{j != i, p} R_p(j) - w_i_avg) on the
/// mask-minus-fair welfare gap, valid in the small-budget regime where the
/// fair optimum occupies only the best stratum i (requires rho <= Pr(X=i),
/// otherwise throws RhoTooLarge).
double gap_lower_bound(const WorldModel& model);

struct DependenceDiagnostics {
  double confounding = 0.0;    // max |Pr(p|x) - Pr(p)|
  double heterogeneity = 0.0;  // max over p of the gamma range across strata
};
DependenceDiagnostics dependence_diagnostics(const WorldModel& model);

enum class WorldMode { Free, IndependentHomogeneous, ConfoundedOnly, HeterogeneousOnly };

const char* to_string(WorldMode mode) noexcept;
WorldMode parse_world_mode(const std::string& name);

/// Free: pi uniform on the simplex, gamma uniform per cell.
/// IndependentHomogeneous: pi product-form, gamma constant across strata.
/// ConfoundedOnly: pi free, gamma constant across strata.
/// HeterogeneousOnly: pi product-form, gamma free.
WorldModel sample_world_with_mode(int k, double rho, WorldMode mode, std::uint64_t seed);

struct GenericitySummary {
  int n_worlds = 0;
  double frac_gap_positive = 0.0;   // mask(0) beats fair(0) by more than 1e-9
  double frac_exploit_fair = 0.0;   // exploit optimum satisfies every stratum band at 0
  double frac_exploit_masked = 0.0; // exploit optimum has |ATE| <= 1e-9
  double frac_mask_fair = 0.0;      // mask(0) optimum satisfies every stratum band at 0
};

GenericitySummary genericity_experiment(int k, double rho, int n_worlds, WorldMode mode,
                                        std::uint64_t seed, int jobs = 1);

enum class ConstraintFamily { Fair, Mask };

const char* to_string(ConstraintFamily family) noexcept;

/// Monte Carlo acceptance probability of the family's eps-slabs for alpha
/// drawn uniformly on [0,1]^(2k). The participation constraint is excluded:
/// it is common to both families.
double feasible_volume_estimate(const WorldModel& model, ConstraintFamily family, double eps,
                                long n_samples, std::uint64_t seed, int jobs = 1);

}  // namespace masklab
