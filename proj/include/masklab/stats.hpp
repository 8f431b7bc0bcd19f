#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "masklab/errors.hpp"

namespace masklab {

/// ln Gamma(x) for x > 0 (Lanczos series).
double log_gamma(double x);

/// Regularized upper incomplete gamma Q(a, x), a > 0, x >= 0.
double regularized_gamma_q(double a, double x);

/// Upper-tail probability P(chi2_df > s).
double chi_square_sf(double s, int df);

/// Upper-tail probability P(Z > z) for standard normal Z.
double normal_sf(double z);

/// Per-stratum unit counts n[x][p] and positive-decision counts d[x][p].
struct StratifiedCounts {
  std::vector<std::array<std::int64_t, 2>> n;
  std::vector<std::array<std::int64_t, 2>> d;

  explicit StratifiedCounts(int k = 0) : n(k, {0, 0}), d(k, {0, 0}) {}
  int k() const { return static_cast<int>(n.size()); }
  void add(int x, int p, bool decided) {
    ++n[x][p];
    if (decided) ++d[x][p];
  }
};

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
  bool reject = false;
  int strata_used = 0;
  bool degenerate = false;  // zero plug-in variance with a nonzero estimate
};

/// Two-sided z-test of zero average disparity. The estimate sums
/// Pr(X=x) * (d1/n1 - d0/n0) over strata with both groups observed; the
/// variance is the full sampling variance of that estimator, including the
/// stratum-share noise term that keeps the test calibrated when nonzero
/// per-stratum effects cancel on average.
TestReport z_test_ate(const StratifiedCounts& counts, double alpha = 0.05);

/// Two-sided Fisher exact p-value for the table [[a, b], [c, d]]: total
/// hypergeometric mass of tables (same margins) no more probable than the
/// observed one, with 1e-12 slack for floating-point ties.
double fisher_exact_two_sided(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

/// Per-stratum Fisher exact p-values combined as S = -2 sum log p against a
/// chi-square with 2 * strata_used degrees of freedom.
TestReport cate_test(const StratifiedCounts& counts, double alpha = 0.05);

enum class AuditVerdict { FairConsistent, MaskedSuspect, Unfair };

const char* to_string(AuditVerdict verdict) noexcept;

/// UNFAIR when the average test rejects; MASKED-SUSPECT when only the
/// stratified test rejects; FAIR-CONSISTENT otherwise.
AuditVerdict audit_verdict(const TestReport& ate, const TestReport& cate);

}  // namespace masklab
