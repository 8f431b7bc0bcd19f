#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "masklab/errors.hpp"

namespace masklab {

/// k x 2 table indexed [stratum][group], group in {0, 1}.
using Cells = std::vector<std::array<double, 2>>;

/// Discrete decision world: joint probabilities pi[x][p], expected rewards
/// gamma[x][p] = E[Y | x, p], and a participation budget rho.
/// Immutable by convention once validated; all derived quantities are
/// recomputed on demand.
struct WorldModel {
  int k = 0;
  Cells pi;
  Cells gamma;
  double rho = 0.0;
};

/// Participation rates alpha[x][p] in [0, 1].
struct Policy {
  Cells alpha;

  static Policy constant(int k, double value);
  int k() const { return static_cast<int>(alpha.size()); }
};

struct PolicyReport {
  double objective = 0.0;      // welfare W
  double ate = 0.0;            // population-average disparity
  double participation = 0.0;  // sum alpha * pi
  std::vector<double> cate_gaps;
  double max_abs_cate = 0.0;
};

/// Throws unless all invariants hold: pi >= 0 summing to 1 (tolerance
/// 1e-12), gamma in [0, 1], k >= 1, rho in (0, 1], and no empty stratum
/// (every Pr(X=x) > 0, since downstream quantities divide by it).
void validate_world(const WorldModel& model);

/// Builds a validated world. A pi total within 1e-12 of 1 is renormalized
/// exactly; anything farther off is rejected.
WorldModel make_world(Cells pi, Cells gamma, double rho);

/// Pr(X=x) for each stratum.
std::vector<double> marginal_x(const WorldModel& model);

/// Pr(p | x); requires every stratum nonempty.
Cells propensity(const WorldModel& model);

struct ContextRewards {
  Cells w;                     // w[x][p] = gamma[x][p] * Pr(p|x)
  std::vector<double> w_avg;   // w[x][0] + w[x][1] = E[Y | x]
};
ContextRewards context_weighted_rewards(const WorldModel& model);

/// W(D) = sum gamma * alpha * pi.
double welfare(const WorldModel& model, const Policy& policy);

/// Backdoor-adjusted effect of the group on the decision:
/// sum_x Pr(X=x) (alpha[x][1] - alpha[x][0]).
double ate_of_policy(const WorldModel& model, const Policy& policy);

/// sum alpha * pi.
double participation_rate(const WorldModel& model, const Policy& policy);

/// Assembles the full report for a policy.
PolicyReport report_policy(const WorldModel& model, const Policy& policy);

/// pi uniform on the 2k-simplex (normalized exponentials), gamma i.i.d.
/// uniform on [0,1]. Deterministic for a fixed seed.
WorldModel sample_world(int k, double rho, std::uint64_t seed);

inline void check_dimensions(const WorldModel& model, const Policy& policy) {
  if (policy.k() != model.k)
    fail(Errc::DimensionMismatch,
         "policy has " + std::to_string(policy.k()) + " strata, world has " +
             std::to_string(model.k));
}

}  // namespace masklab
