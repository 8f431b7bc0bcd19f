#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "masklab/stats.hpp"
#include "masklab/synthesis.hpp"
#include "masklab/world.hpp"

namespace masklab {

struct DecisionRecord {
  int x = 0;
  int p = 0;
  bool d = false;
  std::optional<bool> y;  // present iff d
};

struct DecisionBatch {
  std::vector<DecisionRecord> records;
  long n() const { return static_cast<long>(records.size()); }
};

/// n i.i.d. units: (x, p) ~ pi, d ~ Bernoulli(alpha[x][p]), and
/// y ~ Bernoulli(gamma[x][p]) drawn only when d = 1.
DecisionBatch generate_batch(const WorldModel& model, const Policy& policy, long n,
                             std::uint64_t seed);

StratifiedCounts counts_from(const DecisionBatch& batch, int k);

struct LongevityConfig {
  long batch_size = 500;
  long cap = 200000;
  double alpha_level = 0.05;
};

struct LongevityOutcome {
  long n_reject_ate = 0;   // sample size at first average-test rejection (cap if never)
  long n_reject_cate = 0;  // same for the stratified test
  long n_caught = 0;       // min of the two
  double total_unfairness = 0.0;  // sum over arrivals, until caught, of |alpha1 - alpha0|
};

/// Streams batches into cumulative counts, re-running both tests after each
/// batch, until both hypotheses have been rejected or the cap is reached.
/// Repeated testing on cumulative data is deliberately uncorrected; it
/// mirrors how a regulator watching a feed would behave.
LongevityOutcome run_longevity(const WorldModel& model, const Policy& policy,
                               const LongevityConfig& config, std::uint64_t seed);

struct LongevityRow {
  PolicyFamily family;
  int world_id = 0;
  int rep = 0;
  LongevityOutcome outcome;
};

struct MetricStats {
  double mean = 0.0;
  double se = 0.0;  // sample sd / sqrt(reps)
};

struct FamilySummary {
  MetricStats n_reject_ate;
  MetricStats n_reject_cate;
  MetricStats n_caught;
  MetricStats total_unfairness;
};

struct LongevitySweepResult {
  std::vector<LongevityRow> rows;
  std::map<PolicyFamily, FamilySummary> summary;
};

/// Solves each family at eps = 0 per world and replicates run_longevity
/// with derived sub-seeds. Rows come back ordered by (world, family, rep).
LongevitySweepResult longevity_sweep(const std::vector<WorldModel>& worlds,
                                     const std::vector<PolicyFamily>& families, int replications,
                                     const LongevityConfig& config, std::uint64_t seed,
                                     int jobs = 1);

MetricStats mean_and_se(const std::vector<double>& values);

}  // namespace masklab
