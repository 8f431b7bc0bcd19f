#include "masklab/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace masklab {

namespace {

Policy policy_from_values(int k, const std::vector<double>& values) {
  Policy policy;
  policy.alpha.resize(static_cast<size_t>(k));
  for (int x = 0; x < k; ++x) {
    policy.alpha[x][0] = std::clamp(values[2 * x], 0.0, 1.0);
    policy.alpha[x][1] = std::clamp(values[2 * x + 1], 0.0, 1.0);
  }
  return policy;
}

BoundedLinearProgram base_program(const WorldModel& model) {
  validate_world(model);
  int n = 2 * model.k;
  BoundedLinearProgram program;
  program.objective.resize(n);
  program.lower.assign(n, 0.0);
  program.upper.assign(n, 1.0);
  std::vector<double> participation(n);
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) {
      program.objective[2 * x + p] = model.gamma[x][p] * model.pi[x][p];
      participation[2 * x + p] = model.pi[x][p];
    }
  program.add_constraint(std::move(participation), Relation::Equal, model.rho);
  return program;
}

std::vector<double> ate_row(const WorldModel& model) {
  std::vector<double> row(2 * model.k, 0.0);
  for (int x = 0; x < model.k; ++x) {
    double px = model.pi[x][0] + model.pi[x][1];
    row[2 * x] = -px;
    row[2 * x + 1] = px;
  }
  return row;
}

void add_band(BoundedLinearProgram& program, std::vector<double> row, double eps) {
  if (eps == 0.0) {
    program.add_constraint(std::move(row), Relation::Equal, 0.0);
  } else {
    program.add_constraint(row, Relation::LessEqual, eps);
    program.add_constraint(std::move(row), Relation::GreaterEqual, -eps);
  }
}

SolvedPolicy solve_via_lp(const WorldModel& model, const BoundedLinearProgram& program) {
  LpSolution solution = solve_lp(program);
  SolvedPolicy out;
  out.status = solution.status;
  if (solution.status != LpStatus::Optimal) {
    out.policy = Policy::constant(model.k, 0.0);
    out.report = report_policy(model, out.policy);
    return out;
  }
  out.policy = policy_from_values(model.k, solution.values);
  out.report = report_policy(model, out.policy);
  return out;
}

}  // namespace

const char* to_string(PolicyFamily family) noexcept {
  switch (family) {
    case PolicyFamily::Exploit: return "exploit";
    case PolicyFamily::Fair: return "fair";
    case PolicyFamily::Mask: return "mask";
    case PolicyFamily::MaskWithFair: return "mask+fair";
  }
  return "unknown";
}

PolicyFamily parse_family(const std::string& name) {
  if (name == "exploit") return PolicyFamily::Exploit;
  if (name == "fair") return PolicyFamily::Fair;
  if (name == "mask") return PolicyFamily::Mask;
  if (name == "mask+fair" || name == "mask_fair") return PolicyFamily::MaskWithFair;
  fail(Errc::ParseError, "unknown policy family '" + name + "'");
}

SolvedPolicy solve_exploit(const WorldModel& model) {
  validate_world(model);
  struct Cell {
    double gamma;
    int x;
    int p;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<size_t>(2 * model.k));
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) cells.push_back({model.gamma[x][p], x, p});
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.gamma != b.gamma) return a.gamma > b.gamma;
    if (a.x != b.x) return a.x < b.x;
    return a.p < b.p;
  });

  SolvedPolicy out;
  out.policy = Policy::constant(model.k, 0.0);
  double remaining = model.rho;
  for (const Cell& cell : cells) {
    if (remaining <= 0.0) break;
    double mass = model.pi[cell.x][cell.p];
    if (mass <= 0.0) continue;
    if (mass <= remaining) {
      out.policy.alpha[cell.x][cell.p] = 1.0;
      remaining -= mass;
    } else {
      out.policy.alpha[cell.x][cell.p] = remaining / mass;
      remaining = 0.0;
    }
  }
  out.report = report_policy(model, out.policy);
  return out;
}

SolvedPolicy solve_fair(const WorldModel& model, double eps_fair) {
  validate_world(model);
  if (eps_fair < 0.0) fail(Errc::DomainError, "eps_fair must be >= 0");
  if (eps_fair > 0.0) return solve_via_lp(model, fair_program(model, eps_fair));

  // Water filling: saturate strata in order of average reward until the
  // budget is spent.
  ContextRewards rewards = context_weighted_rewards(model);
  std::vector<double> px = marginal_x(model);
  std::vector<int> order(static_cast<size_t>(model.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (rewards.w_avg[a] != rewards.w_avg[b]) return rewards.w_avg[a] > rewards.w_avg[b];
    return a < b;
  });

  SolvedPolicy out;
  out.policy = Policy::constant(model.k, 0.0);
  double remaining = model.rho;
  for (int x : order) {
    if (remaining <= 0.0) break;
    double rate = std::min(1.0, remaining / px[x]);
    out.policy.alpha[x][0] = rate;
    out.policy.alpha[x][1] = rate;
    remaining -= rate * px[x];
  }
  out.report = report_policy(model, out.policy);
  return out;
}

// TODO: the mask LP dual has a double-threshold structure that would admit a
// direct O(k log k) solver; worth trying if sweeps ever become a bottleneck.
SolvedPolicy solve_mask(const WorldModel& model, double eps_mask) {
  if (eps_mask < 0.0) fail(Errc::DomainError, "eps_mask must be >= 0");
  return solve_via_lp(model, mask_program(model, eps_mask));
}

SolvedPolicy solve_mask_with_fair(const WorldModel& model, double eps_fair) {
  if (eps_fair < 0.0) fail(Errc::DomainError, "eps_fair must be >= 0");
  return solve_via_lp(model, mask_with_fair_program(model, eps_fair));
}

SolvedPolicy solve_family(const WorldModel& model, PolicyFamily family, double eps) {
  switch (family) {
    case PolicyFamily::Exploit: return solve_exploit(model);
    case PolicyFamily::Fair: return solve_fair(model, eps);
    case PolicyFamily::Mask: return solve_mask(model, eps);
    case PolicyFamily::MaskWithFair: return solve_mask_with_fair(model, eps);
  }
  fail(Errc::DomainError, "unknown family");
}

BoundedLinearProgram exploit_program(const WorldModel& model) { return base_program(model); }

BoundedLinearProgram fair_program(const WorldModel& model, double eps_fair) {
  BoundedLinearProgram program = base_program(model);
  for (int x = 0; x < model.k; ++x) {
    std::vector<double> row(static_cast<size_t>(2 * model.k), 0.0);
    row[2 * x] = -1.0;
    row[2 * x + 1] = 1.0;
    add_band(program, std::move(row), eps_fair);
  }
  return program;
}

BoundedLinearProgram mask_program(const WorldModel& model, double eps_mask) {
  BoundedLinearProgram program = base_program(model);
  add_band(program, ate_row(model), eps_mask);
  return program;
}

BoundedLinearProgram mask_with_fair_program(const WorldModel& model, double eps_fair) {
  BoundedLinearProgram program = base_program(model);
  add_band(program, ate_row(model), 0.0);
  for (int x = 0; x < model.k; ++x) {
    std::vector<double> row(static_cast<size_t>(2 * model.k), 0.0);
    row[2 * x] = -1.0;
    row[2 * x + 1] = 1.0;
    add_band(program, std::move(row), eps_fair);
  }
  return program;
}

NormalizationAnchors normalization_anchors(const WorldModel& model) {
  NormalizationAnchors anchors;
  anchors.w_fair0 = solve_fair(model, 0.0).report.objective;
  anchors.w_exploit = solve_exploit(model).report.objective;
  return anchors;
}

double normalized_performance(const NormalizationAnchors& anchors, double w) {
  double gap = anchors.w_exploit - anchors.w_fair0;
  if (gap < 1e-12)
    fail(Errc::DegenerateNormalization,
         "exploit and fair optima coincide (gap " + std::to_string(gap) + ")");
  return (w - anchors.w_fair0) / gap;
}

double normalized_performance(const WorldModel& model, double w) {
  return normalized_performance(normalization_anchors(model), w);
}

}  // namespace masklab
