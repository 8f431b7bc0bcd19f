#include "masklab/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "masklab/parallel.hpp"
#include "masklab/rng.hpp"
#include "masklab/synthesis.hpp"

namespace masklab {

namespace {

constexpr double kGapTol = 1e-9;

int argmax_w_avg(const std::vector<double>& w_avg) {
  int best = 0;
  for (int x = 1; x < static_cast<int>(w_avg.size()); ++x)
    if (w_avg[x] > w_avg[best]) best = x;
  return best;
}

}  // namespace

double arbitrage_rate(const WorldModel& model, int i, int j, int p) {
  validate_world(model);
  if (i == j) fail(Errc::SameStratum, "i and j must differ, both are " + std::to_string(i));
  if (i < 0 || i >= model.k || j < 0 || j >= model.k || p < 0 || p > 1)
    fail(Errc::DimensionMismatch, "stratum/group index out of range");
  Cells prop = propensity(model);
  int q = 1 - p;
  double w_iq = model.gamma[i][q] * prop[i][q];
  double w_jp = model.gamma[j][p] * prop[j][p];
  double denom = prop[i][q] + prop[j][p];
  if (denom <= 0.0)
    fail(Errc::EmptyStratum, "both traded cells have zero propensity");
  return (w_iq + w_jp) / denom;
}

double gap_lower_bound(const WorldModel& model) {
  validate_world(model);
  ContextRewards rewards = context_weighted_rewards(model);
  std::vector<double> px = marginal_x(model);
  Cells prop = propensity(model);
  int i = argmax_w_avg(rewards.w_avg);
  if (model.rho > px[i] + 1e-12)
    fail(Errc::RhoTooLarge, "rho = " + std::to_string(model.rho) +
                                " exceeds Pr(X=" + std::to_string(i) + ") = " +
                                std::to_string(px[i]) + "; bound not claimed there");
  double best = 0.0;
  for (int j = 0; j < model.k; ++j) {
    if (j == i) continue;
    for (int p = 0; p < 2; ++p) {
      // A swap only certifies the bound while it can be scaled to the full
      // budget: capacity min(Pr_i, Pr_j) * (Pr(1-p|i) + Pr(p|j)) >= rho.
      double capacity = std::min(px[i], px[j]) * (prop[i][1 - p] + prop[j][p]);
      if (capacity + 1e-12 < model.rho) continue;
      best = std::max(best, arbitrage_rate(model, i, j, p) - rewards.w_avg[i]);
    }
  }
  return model.rho * best;
}

DependenceDiagnostics dependence_diagnostics(const WorldModel& model) {
  validate_world(model);
  Cells prop = propensity(model);
  double marg_p[2] = {0.0, 0.0};
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) marg_p[p] += model.pi[x][p];

  DependenceDiagnostics diag;
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p)
      diag.confounding = std::max(diag.confounding, std::abs(prop[x][p] - marg_p[p]));
  for (int p = 0; p < 2; ++p) {
    double lo = model.gamma[0][p], hi = model.gamma[0][p];
    for (int x = 1; x < model.k; ++x) {
      lo = std::min(lo, model.gamma[x][p]);
      hi = std::max(hi, model.gamma[x][p]);
    }
    diag.heterogeneity = std::max(diag.heterogeneity, hi - lo);
  }
  return diag;
}

const char* to_string(WorldMode mode) noexcept {
  switch (mode) {
    case WorldMode::Free: return "free";
    case WorldMode::IndependentHomogeneous: return "independent_homogeneous";
    case WorldMode::ConfoundedOnly: return "confounded_only";
    case WorldMode::HeterogeneousOnly: return "heterogeneous_only";
  }
  return "unknown";
}

WorldMode parse_world_mode(const std::string& name) {
  if (name == "free") return WorldMode::Free;
  if (name == "independent_homogeneous") return WorldMode::IndependentHomogeneous;
  if (name == "confounded_only") return WorldMode::ConfoundedOnly;
  if (name == "heterogeneous_only") return WorldMode::HeterogeneousOnly;
  fail(Errc::ParseError, "unknown world mode '" + name + "'");
}

WorldModel sample_world_with_mode(int k, double rho, WorldMode mode, std::uint64_t seed) {
  if (k < 1) fail(Errc::DimensionMismatch, "k must be >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) fail(Errc::BadRho, "rho must be in (0, 1]");
  Rng rng(seed);

  bool product_pi =
      mode == WorldMode::IndependentHomogeneous || mode == WorldMode::HeterogeneousOnly;
  bool constant_gamma =
      mode == WorldMode::IndependentHomogeneous || mode == WorldMode::ConfoundedOnly;

  Cells pi(static_cast<size_t>(k));
  if (product_pi) {
    std::vector<double> px(static_cast<size_t>(k));
    double total = 0.0;
    for (auto& v : px) {
      v = rng.exponential();
      total += v;
    }
    for (auto& v : px) v /= total;
    double e0 = rng.exponential(), e1 = rng.exponential();
    double p1 = e1 / (e0 + e1);
    for (int x = 0; x < k; ++x) pi[x] = {px[x] * (1.0 - p1), px[x] * p1};
  } else {
    double total = 0.0;
    for (auto& row : pi)
      for (auto& cell : row) {
        cell = rng.exponential();
        total += cell;
      }
    for (auto& row : pi)
      for (auto& cell : row) cell /= total;
  }

  Cells gamma(static_cast<size_t>(k));
  if (constant_gamma) {
    double g0 = rng.uniform(), g1 = rng.uniform();
    for (auto& row : gamma) row = {g0, g1};
  } else {
    for (auto& row : gamma)
      for (auto& cell : row) cell = rng.uniform();
  }
  return make_world(std::move(pi), std::move(gamma), rho);
}

GenericitySummary genericity_experiment(int k, double rho, int n_worlds, WorldMode mode,
                                        std::uint64_t seed, int jobs) {
  if (n_worlds < 1) fail(Errc::DomainError, "n_worlds must be >= 1");
  std::atomic<long> gap_positive{0}, exploit_fair{0}, exploit_masked{0}, mask_fair{0};
  parallel_for(n_worlds, jobs, [&](long i) {
    WorldModel model = sample_world_with_mode(k, rho, mode, derive_seed(seed, i));
    SolvedPolicy fair = solve_fair(model, 0.0);
    SolvedPolicy mask = solve_mask(model, 0.0);
    SolvedPolicy exploit = solve_exploit(model);
    if (mask.report.objective - fair.report.objective > kGapTol) ++gap_positive;
    if (exploit.report.max_abs_cate <= kGapTol) ++exploit_fair;
    if (std::abs(exploit.report.ate) <= kGapTol) ++exploit_masked;
    if (mask.report.max_abs_cate <= kGapTol) ++mask_fair;
  });
  GenericitySummary summary;
  summary.n_worlds = n_worlds;
  summary.frac_gap_positive = static_cast<double>(gap_positive) / n_worlds;
  summary.frac_exploit_fair = static_cast<double>(exploit_fair) / n_worlds;
  summary.frac_exploit_masked = static_cast<double>(exploit_masked) / n_worlds;
  summary.frac_mask_fair = static_cast<double>(mask_fair) / n_worlds;
  return summary;
}

const char* to_string(ConstraintFamily family) noexcept {
  return family == ConstraintFamily::Fair ? "fair" : "mask";
}

double feasible_volume_estimate(const WorldModel& model, ConstraintFamily family, double eps,
                                long n_samples, std::uint64_t seed, int jobs) {
  validate_world(model);
  if (!(eps > 0.0)) fail(Errc::DomainError, "eps must be > 0");
  if (n_samples < 1) fail(Errc::DomainError, "n_samples must be >= 1");

  std::vector<double> px = marginal_x(model);
  const int k = model.k;
  constexpr long kBlock = 65536;
  long blocks = (n_samples + kBlock - 1) / kBlock;
  std::atomic<long> accepted{0};
  parallel_for(blocks, jobs, [&](long b) {
    Rng rng(derive_seed(seed, b));
    long begin = b * kBlock;
    long end = std::min(n_samples, begin + kBlock);
    long hits = 0;
    for (long s = begin; s < end; ++s) {
      bool ok = true;
      double ate = 0.0;
      for (int x = 0; x < k; ++x) {
        double a0 = rng.uniform();
        double a1 = rng.uniform();
        double gap = a1 - a0;
        if (family == ConstraintFamily::Fair) {
          if (std::abs(gap) > eps) ok = false;  // keep draining the stream
        } else {
          ate += px[x] * gap;
        }
      }
      if (family == ConstraintFamily::Mask) ok = std::abs(ate) <= eps;
      if (ok) ++hits;
    }
    accepted += hits;
  });
  return static_cast<double>(accepted) / static_cast<double>(n_samples);
}

}  // namespace masklab
