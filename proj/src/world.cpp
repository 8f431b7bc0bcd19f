#include "masklab/world.hpp"

#include <cmath>
#include <string>

#include "masklab/rng.hpp"

namespace masklab {

namespace {

constexpr double kNormTol = 1e-12;

std::string cell_name(const char* field, int x, int p) {
  return std::string(field) + "[" + std::to_string(x) + "][" + std::to_string(p) + "]";
}

void check_shape(const WorldModel& model) {
  if (model.k < 1) fail(Errc::DimensionMismatch, "k must be >= 1, got " + std::to_string(model.k));
  if (static_cast<int>(model.pi.size()) != model.k)
    fail(Errc::DimensionMismatch, "pi has " + std::to_string(model.pi.size()) +
                                      " rows, expected " + std::to_string(model.k));
  if (static_cast<int>(model.gamma.size()) != model.k)
    fail(Errc::DimensionMismatch, "gamma has " + std::to_string(model.gamma.size()) +
                                      " rows, expected " + std::to_string(model.k));
}

}  // namespace

Policy Policy::constant(int k, double value) {
  Policy policy;
  policy.alpha.assign(static_cast<size_t>(k), {value, value});
  return policy;
}

void validate_world(const WorldModel& model) {
  check_shape(model);
  double total = 0.0;
  for (int x = 0; x < model.k; ++x) {
    for (int p = 0; p < 2; ++p) {
      double v = model.pi[x][p];
      if (!(v >= 0.0))
        fail(Errc::NegativeProbability, cell_name("pi", x, p) + " = " + std::to_string(v));
      total += v;
      double g = model.gamma[x][p];
      if (!(g >= 0.0 && g <= 1.0))
        fail(Errc::RewardOutOfRange, cell_name("gamma", x, p) + " = " + std::to_string(g));
    }
  }
  if (std::abs(total - 1.0) > kNormTol)
    fail(Errc::NotNormalized, "pi sums to " + std::to_string(total));
  if (!(model.rho > 0.0 && model.rho <= 1.0))
    fail(Errc::BadRho, "rho = " + std::to_string(model.rho) + ", expected (0, 1]");
  for (int x = 0; x < model.k; ++x) {
    if (model.pi[x][0] + model.pi[x][1] <= 0.0)
      fail(Errc::EmptyStratum, "Pr(X=" + std::to_string(x) + ") = 0");
  }
}

WorldModel make_world(Cells pi, Cells gamma, double rho) {
  WorldModel model{static_cast<int>(pi.size()), std::move(pi), std::move(gamma), rho};
  check_shape(model);
  double total = 0.0;
  for (const auto& row : model.pi) total += row[0] + row[1];
  if (std::abs(total - 1.0) > kNormTol)
    fail(Errc::NotNormalized, "pi sums to " + std::to_string(total));
  if (total != 1.0 && total > 0.0) {
    for (auto& row : model.pi) {
      row[0] /= total;
      row[1] /= total;
    }
  }
  validate_world(model);
  return model;
}

std::vector<double> marginal_x(const WorldModel& model) {
  std::vector<double> out(static_cast<size_t>(model.k));
  for (int x = 0; x < model.k; ++x) out[x] = model.pi[x][0] + model.pi[x][1];
  return out;
}

Cells propensity(const WorldModel& model) {
  Cells out(static_cast<size_t>(model.k));
  for (int x = 0; x < model.k; ++x) {
    double px = model.pi[x][0] + model.pi[x][1];
    if (px <= 0.0) fail(Errc::EmptyStratum, "Pr(X=" + std::to_string(x) + ") = 0");
    out[x] = {model.pi[x][0] / px, model.pi[x][1] / px};
  }
  return out;
}

ContextRewards context_weighted_rewards(const WorldModel& model) {
  Cells prop = propensity(model);
  ContextRewards rewards;
  rewards.w.resize(static_cast<size_t>(model.k));
  rewards.w_avg.resize(static_cast<size_t>(model.k));
  for (int x = 0; x < model.k; ++x) {
    rewards.w[x] = {model.gamma[x][0] * prop[x][0], model.gamma[x][1] * prop[x][1]};
    rewards.w_avg[x] = rewards.w[x][0] + rewards.w[x][1];
  }
  return rewards;
}

double welfare(const WorldModel& model, const Policy& policy) {
  check_dimensions(model, policy);
  double w = 0.0;
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) w += model.gamma[x][p] * policy.alpha[x][p] * model.pi[x][p];
  return w;
}

double ate_of_policy(const WorldModel& model, const Policy& policy) {
  check_dimensions(model, policy);
  double ate = 0.0;
  for (int x = 0; x < model.k; ++x) {
    double px = model.pi[x][0] + model.pi[x][1];
    if (px <= 0.0) fail(Errc::EmptyStratum, "Pr(X=" + std::to_string(x) + ") = 0");
    ate += px * (policy.alpha[x][1] - policy.alpha[x][0]);
  }
  return ate;
}

double participation_rate(const WorldModel& model, const Policy& policy) {
  check_dimensions(model, policy);
  double rate = 0.0;
  for (int x = 0; x < model.k; ++x)
    for (int p = 0; p < 2; ++p) rate += policy.alpha[x][p] * model.pi[x][p];
  return rate;
}

PolicyReport report_policy(const WorldModel& model, const Policy& policy) {
  PolicyReport report;
  report.objective = welfare(model, policy);
  report.participation = participation_rate(model, policy);
  report.cate_gaps.resize(static_cast<size_t>(model.k));
  report.ate = 0.0;
  report.max_abs_cate = 0.0;
  auto px = marginal_x(model);
  for (int x = 0; x < model.k; ++x) {
    double gap = policy.alpha[x][1] - policy.alpha[x][0];
    report.cate_gaps[x] = gap;
    report.ate += px[x] * gap;
    report.max_abs_cate = std::max(report.max_abs_cate, std::abs(gap));
  }
  return report;
}

WorldModel sample_world(int k, double rho, std::uint64_t seed) {
  if (k < 1) fail(Errc::DimensionMismatch, "k must be >= 1, got " + std::to_string(k));
  if (!(rho > 0.0 && rho <= 1.0))
    fail(Errc::BadRho, "rho = " + std::to_string(rho) + ", expected (0, 1]");
  Rng rng(seed);
  Cells pi(static_cast<size_t>(k));
  double total = 0.0;
  for (auto& row : pi)
    for (auto& cell : row) {
      cell = rng.exponential();
      total += cell;
    }
  for (auto& row : pi)
    for (auto& cell : row) cell /= total;
  Cells gamma(static_cast<size_t>(k));
  for (auto& row : gamma)
    for (auto& cell : row) cell = rng.uniform();
  return make_world(std::move(pi), std::move(gamma), rho);
}

}  // namespace masklab
