#include "masklab/sim.hpp"

#include <algorithm>
#include <cmath>

#include "masklab/parallel.hpp"
#include "masklab/rng.hpp"

namespace masklab {

namespace {

std::vector<double> cell_cumulative(const WorldModel& model) {
  std::vector<double> cum(static_cast<size_t>(2 * model.k));
  double acc = 0.0;
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) {
      acc += model.pi[x][p];
      cum[2 * x + p] = acc;
    }
  cum.back() = 1.0;
  return cum;
}

int draw_cell(const std::vector<double>& cum, Rng& rng) {
  double u = rng.uniform();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) --it;
  return static_cast<int>(it - cum.begin());
}

}  // namespace

DecisionBatch generate_batch(const WorldModel& model, const Policy& policy, long n,
                             std::uint64_t seed) {
  validate_world(model);
  check_dimensions(model, policy);
  std::vector<double> cum = cell_cumulative(model);
  Rng rng(seed);
  DecisionBatch batch;
  batch.records.resize(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    int cell = draw_cell(cum, rng);
    DecisionRecord& rec = batch.records[i];
    rec.x = cell / 2;
    rec.p = cell % 2;
    rec.d = rng.bernoulli(policy.alpha[rec.x][rec.p]);
    if (rec.d) rec.y = rng.bernoulli(model.gamma[rec.x][rec.p]);
  }
  return batch;
}

StratifiedCounts counts_from(const DecisionBatch& batch, int k) {
  StratifiedCounts counts(k);
  for (const DecisionRecord& rec : batch.records) {
    if (rec.x < 0 || rec.x >= k || rec.p < 0 || rec.p > 1)
      fail(Errc::DimensionMismatch, "record outside stratum/group range");
    counts.add(rec.x, rec.p, rec.d);
  }
  return counts;
}

LongevityOutcome run_longevity(const WorldModel& model, const Policy& policy,
                               const LongevityConfig& config, std::uint64_t seed) {
  validate_world(model);
  check_dimensions(model, policy);
  if (config.batch_size < 1) fail(Errc::DomainError, "batch_size must be >= 1");
  if (config.cap < config.batch_size) fail(Errc::DomainError, "cap must be >= batch_size");

  std::vector<double> cum = cell_cumulative(model);
  std::vector<double> gap(static_cast<size_t>(model.k));
  for (int x = 0; x < model.k; ++x) gap[x] = policy.alpha[x][1] - policy.alpha[x][0];

  Rng rng(seed);
  StratifiedCounts counts(model.k);
  LongevityOutcome out;
  out.n_reject_ate = config.cap;
  out.n_reject_cate = config.cap;
  bool ate_rejected = false, cate_rejected = false, caught = false;
  long n = 0;
  while (n < config.cap && !(ate_rejected && cate_rejected)) {
    long take = std::min(config.batch_size, config.cap - n);
    double batch_unfairness = 0.0;
    for (long i = 0; i < take; ++i) {
      int cell = draw_cell(cum, rng);
      int x = cell / 2, p = cell % 2;
      bool d = rng.bernoulli(policy.alpha[x][p]);
      if (d) rng.bernoulli(model.gamma[x][p]);  // keep the stream aligned with generate_batch
      counts.add(x, p, d);
      batch_unfairness += std::abs(gap[x]);
    }
    n += take;
    if (!caught) out.total_unfairness += batch_unfairness;

    if (!ate_rejected) {
      try {
        if (z_test_ate(counts, config.alpha_level).reject) {
          ate_rejected = true;
          out.n_reject_ate = n;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::NoUsableStrata) throw;
      }
    }
    if (!cate_rejected) {
      try {
        if (cate_test(counts, config.alpha_level).reject) {
          cate_rejected = true;
          out.n_reject_cate = n;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::NoUsableStrata) throw;
      }
    }
    if (!caught && (ate_rejected || cate_rejected)) caught = true;
  }
  out.n_caught = std::min(out.n_reject_ate, out.n_reject_cate);
  return out;
}

MetricStats mean_and_se(const std::vector<double>& values) {
  MetricStats stats;
  size_t n = values.size();
  if (n == 0) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(n);
  if (n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
  return stats;
}

LongevitySweepResult longevity_sweep(const std::vector<WorldModel>& worlds,
                                     const std::vector<PolicyFamily>& families, int replications,
                                     const LongevityConfig& config, std::uint64_t seed, int jobs) {
  if (replications < 2) fail(Errc::DomainError, "replications must be >= 2");
  if (worlds.empty()) fail(Errc::DomainError, "no worlds given");

  struct Task {
    int world_id;
    size_t family_idx;
    int rep;
  };
  std::vector<Task> tasks;
  std::vector<std::vector<Policy>> solved(worlds.size());
  for (size_t w = 0; w < worlds.size(); ++w) {
    for (size_t f = 0; f < families.size(); ++f) {
      solved[w].push_back(solve_family(worlds[w], families[f], 0.0).policy);
      for (int r = 0; r < replications; ++r)
        tasks.push_back({static_cast<int>(w), f, r});
    }
  }

  LongevitySweepResult result;
  result.rows.resize(tasks.size());
  parallel_for(static_cast<long>(tasks.size()), jobs, [&](long t) {
    const Task& task = tasks[t];
    LongevityRow& row = result.rows[t];
    row.family = families[task.family_idx];
    row.world_id = task.world_id;
    row.rep = task.rep;
    row.outcome = run_longevity(worlds[task.world_id], solved[task.world_id][task.family_idx],
                                config, derive_seed(seed, static_cast<std::uint64_t>(t)));
  });

  std::map<PolicyFamily, std::vector<LongevityOutcome>> grouped;
  for (const LongevityRow& row : result.rows) grouped[row.family].push_back(row.outcome);
  for (const auto& [family, outcomes] : grouped) {
    std::vector<double> a, c, m, u;
    for (const LongevityOutcome& o : outcomes) {
      a.push_back(static_cast<double>(o.n_reject_ate));
      c.push_back(static_cast<double>(o.n_reject_cate));
      m.push_back(static_cast<double>(o.n_caught));
      u.push_back(o.total_unfairness);
    }
    FamilySummary summary;
    summary.n_reject_ate = mean_and_se(a);
    summary.n_reject_cate = mean_and_se(c);
    summary.n_caught = mean_and_se(m);
    summary.total_unfairness = mean_and_se(u);
    result.summary[family] = summary;
  }
  return result;
}

}  // namespace masklab
