#include "masklab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace masklab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min() / kEps;

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < 500; ++i) {
    ++ap;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kEps) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) fail(Errc::DomainError, "log_gamma requires x > 0, got " + std::to_string(x));
  static const double coef[14] = {
      57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
      -0.491913816097620199,   0.339946499848118887e-4, 0.465236289270485756e-4,
      -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
      0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
      -0.261908384015814087e-4, 0.368991826595316234e-5};
  double y = x;
  double tmp = x + 5.24218750000000000;
  tmp = (x + 0.5) * std::log(tmp) - tmp;
  double ser = 0.999999999999997092;
  for (double c : coef) ser += c / ++y;
  return tmp + std::log(2.5066282746310005 * ser / x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x))
    fail(Errc::DomainError, "regularized_gamma_q requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double s, int df) {
  if (df < 1) fail(Errc::DomainError, "chi_square_sf requires df >= 1");
  if (!(s >= 0.0)) fail(Errc::DomainError, "chi_square_sf requires s >= 0");
  return regularized_gamma_q(0.5 * df, 0.5 * s);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

TestReport z_test_ate(const StratifiedCounts& counts, double alpha) {
  std::int64_t total = 0;
  for (int x = 0; x < counts.k(); ++x) total += counts.n[x][0] + counts.n[x][1];

  double ate = 0.0;
  double variance = 0.0;
  double weighted_tau_sq = 0.0;
  int used = 0;
  for (int x = 0; x < counts.k(); ++x) {
    std::int64_t n0 = counts.n[x][0], n1 = counts.n[x][1];
    if (n0 <= 0 || n1 <= 0) continue;  // stratum lacks one group
    ++used;
    double phat = static_cast<double>(n0 + n1) / static_cast<double>(total);
    double q0 = static_cast<double>(counts.d[x][0]) / static_cast<double>(n0);
    double q1 = static_cast<double>(counts.d[x][1]) / static_cast<double>(n1);
    double tau = q1 - q0;
    ate += phat * tau;
    weighted_tau_sq += phat * tau * tau;
    variance += phat * phat *
                (q1 * (1.0 - q1) / static_cast<double>(n1) + q0 * (1.0 - q0) / static_cast<double>(n0));
  }
  if (used == 0) fail(Errc::NoUsableStrata, "no stratum has observations in both groups");
  // Stratum-share noise enters through the estimate whenever the
  // per-stratum effects are nonzero, even if they cancel on average; without
  // this term the statistic is over-dispersed exactly for masked policies.
  variance += std::max(0.0, weighted_tau_sq - ate * ate) / static_cast<double>(total);

  TestReport report;
  report.df = 0;
  report.strata_used = used;
  if (variance > 0.0) {
    report.statistic = ate / std::sqrt(variance);
    report.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(report.statistic)));
  } else if (ate == 0.0) {
    report.statistic = 0.0;
    report.p_value = 1.0;
  } else {
    report.statistic = std::copysign(std::numeric_limits<double>::infinity(), ate);
    report.p_value = 0.0;
    report.degenerate = true;
  }
  report.reject = report.p_value < alpha;
  return report;
}

double fisher_exact_two_sided(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  if (a < 0 || b < 0 || c < 0 || d < 0)
    fail(Errc::DomainError, "fisher_exact_two_sided requires nonnegative counts");
  std::int64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) return 1.0;  // single possible table

  std::int64_t n = r1 + r2;
  std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  std::int64_t hi = std::min(c1, r1);

  // Unnormalized masses by the neighbor-ratio recurrence outward from the
  // mode; normalizing by the total avoids overflow and keeps sub-1e-12
  // relative error over long supports.
  std::int64_t mode = std::clamp(
      static_cast<std::int64_t>((static_cast<double>(r1 + 1) * static_cast<double>(c1 + 1)) /
                                static_cast<double>(n + 2)),
      lo, hi);
  std::vector<double> mass(static_cast<size_t>(hi - lo + 1), 0.0);
  auto up_ratio = [&](std::int64_t x) {
    // mass(x+1) / mass(x)
    return (static_cast<double>(r1 - x) * static_cast<double>(c1 - x)) /
           (static_cast<double>(x + 1) * static_cast<double>(r2 - c1 + x + 1));
  };
  mass[mode - lo] = 1.0;
  for (std::int64_t x = mode; x < hi; ++x) mass[x + 1 - lo] = mass[x - lo] * up_ratio(x);
  for (std::int64_t x = mode; x > lo; --x) mass[x - 1 - lo] = mass[x - lo] / up_ratio(x - 1);

  double total = 0.0;
  for (double v : mass) total += v;
  double observed = mass[a - lo] / total;
  double p = 0.0;
  for (double v : mass) {
    if (v / total <= observed + 1e-12) p += v / total;
  }
  // The observed table can underflow for enormous, extreme tables; keep the
  // p-value strictly positive so log(p) stays finite downstream.
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

TestReport cate_test(const StratifiedCounts& counts, double alpha) {
  double s = 0.0;
  int used = 0;
  for (int x = 0; x < counts.k(); ++x) {
    std::int64_t n0 = counts.n[x][0], n1 = counts.n[x][1];
    if (n0 <= 0 || n1 <= 0) continue;
    double px = fisher_exact_two_sided(counts.d[x][1], n1 - counts.d[x][1], counts.d[x][0],
                                       n0 - counts.d[x][0]);
    s += -2.0 * std::log(px);
    ++used;
  }
  if (used == 0) fail(Errc::NoUsableStrata, "no stratum has observations in both groups");

  TestReport report;
  report.statistic = s;
  report.df = 2 * used;
  report.strata_used = used;
  report.p_value = chi_square_sf(s, report.df);
  report.reject = report.p_value < alpha;
  return report;
}

const char* to_string(AuditVerdict verdict) noexcept {
  switch (verdict) {
    case AuditVerdict::FairConsistent: return "FAIR-CONSISTENT";
    case AuditVerdict::MaskedSuspect: return "MASKED-SUSPECT";
    case AuditVerdict::Unfair: return "UNFAIR";
  }
  return "unknown";
}

AuditVerdict audit_verdict(const TestReport& ate, const TestReport& cate) {
  if (ate.reject) return AuditVerdict::Unfair;
  if (cate.reject) return AuditVerdict::MaskedSuspect;
  return AuditVerdict::FairConsistent;
}

}  // namespace masklab
