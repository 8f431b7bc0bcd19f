#include "masklab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace masklab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;

enum class VarState { Basic, AtLower, AtUpper };

// Dense column-major constraint matrix plus simplex working state. The
// basis inverse is kept explicitly and updated per pivot; it is rebuilt
// from scratch periodically and before extracting the final solution.
struct Tableau {
  int m = 0;          // rows
  int total = 0;      // structural + slack + artificial columns
  int n_art_begin = 0;
  std::vector<double> cols;  // total columns of length m
  std::vector<double> rhs;
  std::vector<double> lower, upper;
  std::vector<double> x;     // current value per variable
  std::vector<VarState> state;
  std::vector<int> basis;          // var index per row
  std::vector<double> binv;        // m*m, row-major
  double tol = 1e-9;

  double* col(int j) { return cols.data() + static_cast<size_t>(j) * m; }
  const double* col(int j) const { return cols.data() + static_cast<size_t>(j) * m; }

  bool fixed(int j) const { return upper[j] - lower[j] <= 0.0; }

  void refactorize();
  void recompute_basics();
  bool price_and_pivot(const std::vector<double>& cost, bool* unbounded);
  LpStatus run(const std::vector<double>& cost);
};

// Rebuilds binv by Gauss-Jordan on [B | I] with partial pivoting.
void Tableau::refactorize() {
  std::vector<double> work(static_cast<size_t>(m) * 2 * m, 0.0);
  auto at = [&](int r, int c) -> double& { return work[static_cast<size_t>(r) * 2 * m + c]; };
  for (int r = 0; r < m; ++r) {
    const double* column = col(basis[r]);
    for (int i = 0; i < m; ++i) at(i, r) = column[i];
    at(r, m + r) = 1.0;
  }
  for (int c = 0; c < m; ++c) {
    int piv = c;
    for (int r = c + 1; r < m; ++r)
      if (std::abs(at(r, c)) > std::abs(at(piv, c))) piv = r;
    if (std::abs(at(piv, c)) < 1e-14) throw std::logic_error("singular simplex basis");
    if (piv != c)
      for (int j = 0; j < 2 * m; ++j) std::swap(at(piv, j), at(c, j));
    double inv = 1.0 / at(c, c);
    for (int j = 0; j < 2 * m; ++j) at(c, j) *= inv;
    for (int r = 0; r < m; ++r) {
      if (r == c) continue;
      double f = at(r, c);
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * m; ++j) at(r, j) -= f * at(c, j);
    }
  }
  for (int r = 0; r < m; ++r)
    for (int c2 = 0; c2 < m; ++c2) binv[static_cast<size_t>(r) * m + c2] = at(r, m + c2);
}

// x_B = binv * (rhs - N x_N), recomputed from nonbasic values each step to
// avoid drift.
void Tableau::recompute_basics() {
  std::vector<double> residual(rhs);
  for (int j = 0; j < total; ++j) {
    if (state[j] == VarState::Basic || x[j] == 0.0) continue;
    const double* column = col(j);
    for (int i = 0; i < m; ++i) residual[i] -= column[i] * x[j];
  }
  for (int r = 0; r < m; ++r) {
    double v = 0.0;
    const double* row = binv.data() + static_cast<size_t>(r) * m;
    for (int i = 0; i < m; ++i) v += row[i] * residual[i];
    x[basis[r]] = v;
  }
}

// One simplex iteration under Bland's rule: smallest-index eligible
// entering variable, smallest-index leaving variable among ratio-test ties.
// Returns false at optimality.
bool Tableau::price_and_pivot(const std::vector<double>& cost, bool* unbounded) {
  *unbounded = false;
  // y = c_B binv
  std::vector<double> y(static_cast<size_t>(m), 0.0);
  for (int r = 0; r < m; ++r) {
    double cb = cost[basis[r]];
    if (cb == 0.0) continue;
    const double* row = binv.data() + static_cast<size_t>(r) * m;
    for (int i = 0; i < m; ++i) y[i] += cb * row[i];
  }
  int entering = -1;
  int direction = 0;
  for (int j = 0; j < total; ++j) {
    if (state[j] == VarState::Basic || fixed(j)) continue;
    const double* column = col(j);
    double d = cost[j];
    for (int i = 0; i < m; ++i) d -= y[i] * column[i];
    bool is_free = !std::isfinite(lower[j]) && !std::isfinite(upper[j]);
    if ((state[j] == VarState::AtLower || is_free) && d > tol) {
      entering = j;
      direction = +1;
      break;
    }
    if ((state[j] == VarState::AtUpper || is_free) && d < -tol) {
      entering = j;
      direction = -1;
      break;
    }
  }
  if (entering < 0) return false;

  // w = binv * A_entering
  std::vector<double> w(static_cast<size_t>(m), 0.0);
  {
    const double* column = col(entering);
    for (int r = 0; r < m; ++r) {
      double v = 0.0;
      const double* row = binv.data() + static_cast<size_t>(r) * m;
      for (int i = 0; i < m; ++i) v += row[i] * column[i];
      w[r] = v;
    }
  }

  // Ratio test: the entering variable moves by t in `direction`; each basic
  // variable moves by -direction * w_r * t and may hit one of its bounds.
  double span = upper[entering] - lower[entering];
  double t_limit = std::isfinite(span) ? span : kInf;
  int leaving_row = -1;
  int leaving_to_upper = 0;
  for (int r = 0; r < m; ++r) {
    double delta = -direction * w[r];
    if (std::abs(delta) <= kPivotTol) continue;
    int b = basis[r];
    double limit;
    int to_upper;
    if (delta > 0) {
      if (!std::isfinite(upper[b])) continue;
      limit = (upper[b] - x[b]) / delta;
      to_upper = 1;
    } else {
      if (!std::isfinite(lower[b])) continue;
      limit = (lower[b] - x[b]) / delta;
      to_upper = 0;
    }
    if (limit < 0.0) limit = 0.0;  // degenerate: already at (or past) the bound
    bool take;
    if (leaving_row < 0)
      take = limit <= t_limit + kPivotTol;  // row limit beats or ties the bound-flip span
    else if (limit < t_limit - kPivotTol)
      take = true;
    else
      take = limit <= t_limit + kPivotTol && b < basis[leaving_row];  // Bland tie-break
    if (take) {
      t_limit = std::min(t_limit, limit);
      leaving_row = r;
      leaving_to_upper = to_upper;
    }
  }

  if (!std::isfinite(t_limit)) {
    *unbounded = true;
    return false;
  }

  double t = std::max(t_limit, 0.0);
  if (leaving_row < 0) {
    // Bound flip: the entering variable crosses to its opposite bound.
    x[entering] = direction > 0 ? upper[entering] : lower[entering];
    state[entering] = direction > 0 ? VarState::AtUpper : VarState::AtLower;
    recompute_basics();
    return true;
  }

  int leaving = basis[leaving_row];
  x[entering] += direction * t;
  x[leaving] = leaving_to_upper ? upper[leaving] : lower[leaving];
  state[leaving] = leaving_to_upper ? VarState::AtUpper : VarState::AtLower;
  state[entering] = VarState::Basic;
  basis[leaving_row] = entering;

  // binv update: divide the pivot row by w_r, eliminate w from other rows.
  double inv = 1.0 / w[leaving_row];
  double* prow = binv.data() + static_cast<size_t>(leaving_row) * m;
  for (int i = 0; i < m; ++i) prow[i] *= inv;
  for (int r = 0; r < m; ++r) {
    if (r == leaving_row) continue;
    double f = w[r];
    if (f == 0.0) continue;
    double* row = binv.data() + static_cast<size_t>(r) * m;
    for (int i = 0; i < m; ++i) row[i] -= f * prow[i];
  }
  recompute_basics();
  return true;
}

LpStatus Tableau::run(const std::vector<double>& cost) {
  long iter = 0;
  const long cap = 20000 + 200L * total;
  for (;;) {
    if (++iter > cap) throw std::logic_error("simplex iteration limit exceeded");
    if (iter % 128 == 0) {
      refactorize();
      recompute_basics();
    }
    bool unbounded = false;
    if (!price_and_pivot(cost, &unbounded))
      return unbounded ? LpStatus::Unbounded : LpStatus::Optimal;
  }
}

void check_program(const BoundedLinearProgram& program, const LpOptions& options) {
  int n = program.n();
  if (n < 1) fail(Errc::MalformedProgram, "program has no variables");
  if (n > options.max_vars)
    fail(Errc::MalformedProgram, "program has " + std::to_string(n) +
                                     " variables, cap is " + std::to_string(options.max_vars));
  if (static_cast<int>(program.lower.size()) != n || static_cast<int>(program.upper.size()) != n)
    fail(Errc::MalformedProgram, "bound vectors do not match variable count");
  for (int j = 0; j < n; ++j) {
    if (std::isnan(program.lower[j]) || std::isnan(program.upper[j]) ||
        !std::isfinite(program.objective[j]))
      fail(Errc::MalformedProgram, "non-finite data at variable " + std::to_string(j));
    if (program.lower[j] > program.upper[j])
      fail(Errc::MalformedProgram, "lower > upper for variable " + std::to_string(j));
  }
  for (size_t i = 0; i < program.constraints.size(); ++i) {
    const auto& c = program.constraints[i];
    if (static_cast<int>(c.coeffs.size()) != n)
      fail(Errc::MalformedProgram, "constraint " + std::to_string(i) + " has " +
                                       std::to_string(c.coeffs.size()) + " coefficients, expected " +
                                       std::to_string(n));
    if (!std::isfinite(c.rhs))
      fail(Errc::MalformedProgram, "constraint " + std::to_string(i) + " has non-finite rhs");
    for (double v : c.coeffs)
      if (!std::isfinite(v))
        fail(Errc::MalformedProgram, "constraint " + std::to_string(i) + " has non-finite coefficient");
  }
}

// No constraints: each variable sits at whichever bound its objective sign
// prefers.
LpSolution solve_box_only(const BoundedLinearProgram& program) {
  LpSolution solution;
  solution.values.assign(program.n(), 0.0);
  solution.status = LpStatus::Optimal;
  for (int j = 0; j < program.n(); ++j) {
    double c = program.objective[j];
    double v;
    if (c > 0.0)
      v = program.upper[j];
    else if (c < 0.0)
      v = program.lower[j];
    else
      v = std::isfinite(program.lower[j]) ? program.lower[j]
                                          : (std::isfinite(program.upper[j]) ? program.upper[j] : 0.0);
    if (!std::isfinite(v)) {
      solution.status = LpStatus::Unbounded;
      return solution;
    }
    solution.values[j] = v;
    solution.objective_value += c * v;
  }
  return solution;
}

}  // namespace

void BoundedLinearProgram::add_constraint(std::vector<double> coeffs, Relation rel, double rhs) {
  constraints.push_back({std::move(coeffs), rel, rhs});
}

const char* to_string(LpStatus status) noexcept {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

LpSolution solve_lp(const BoundedLinearProgram& program, const LpOptions& options) {
  check_program(program, options);
  if (program.constraints.empty()) return solve_box_only(program);

  const int n = program.n();
  const int m = static_cast<int>(program.constraints.size());
  int slacks = 0;
  for (const auto& c : program.constraints)
    if (c.rel != Relation::Equal) ++slacks;

  Tableau t;
  t.m = m;
  t.total = n + slacks + m;  // structural + slack + one artificial per row
  t.n_art_begin = n + slacks;
  t.tol = options.tol;
  t.cols.assign(static_cast<size_t>(t.total) * m, 0.0);
  t.rhs.resize(m);
  t.lower.assign(t.total, 0.0);
  t.upper.assign(t.total, kInf);
  t.x.assign(t.total, 0.0);
  t.state.assign(t.total, VarState::AtLower);
  t.basis.resize(m);
  t.binv.assign(static_cast<size_t>(m) * m, 0.0);

  for (int j = 0; j < n; ++j) {
    t.lower[j] = program.lower[j];
    t.upper[j] = program.upper[j];
    for (int i = 0; i < m; ++i) t.col(j)[i] = program.constraints[i].coeffs[j];
  }
  int sj = n;
  for (int i = 0; i < m; ++i) {
    const auto& c = program.constraints[i];
    t.rhs[i] = c.rhs;
    if (c.rel == Relation::LessEqual)
      t.col(sj++)[i] = 1.0;
    else if (c.rel == Relation::GreaterEqual)
      t.col(sj++)[i] = -1.0;
  }

  // Start every structural/slack variable at its bound nearest to being
  // feasible for the box (lower when finite, else upper, else 0).
  for (int j = 0; j < n + slacks; ++j) {
    if (std::isfinite(t.lower[j])) {
      t.x[j] = t.lower[j];
      t.state[j] = VarState::AtLower;
    } else if (std::isfinite(t.upper[j])) {
      t.x[j] = t.upper[j];
      t.state[j] = VarState::AtUpper;
    } else {
      t.x[j] = 0.0;
      t.state[j] = VarState::AtLower;  // free variable pinned to 0 initially
      t.lower[j] = -kInf;
    }
  }

  // Phase 1: artificial basis absorbing the residual, minimize its total.
  std::vector<double> residual(t.rhs);
  for (int j = 0; j < n + slacks; ++j) {
    if (t.x[j] == 0.0) continue;
    for (int i = 0; i < m; ++i) residual[i] -= t.col(j)[i] * t.x[j];
  }
  std::vector<double> phase1_cost(t.total, 0.0);
  for (int i = 0; i < m; ++i) {
    int aj = t.n_art_begin + i;
    t.col(aj)[i] = residual[i] < 0.0 ? -1.0 : 1.0;
    t.x[aj] = std::abs(residual[i]);
    t.state[aj] = VarState::Basic;
    t.basis[i] = aj;
    t.binv[static_cast<size_t>(i) * m + i] = residual[i] < 0.0 ? -1.0 : 1.0;
    phase1_cost[aj] = -1.0;
  }

  LpSolution solution;
  LpStatus phase1 = t.run(phase1_cost);
  if (phase1 == LpStatus::Unbounded) throw std::logic_error("phase-1 objective unbounded");
  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i) infeasibility += std::abs(t.x[t.n_art_begin + i]);
  if (infeasibility > options.tol) {
    solution.status = LpStatus::Infeasible;
    solution.values.assign(n, 0.0);
    return solution;
  }

  // Phase 2: pin artificials at zero and optimize the real objective.
  for (int i = 0; i < m; ++i) {
    int aj = t.n_art_begin + i;
    t.lower[aj] = 0.0;
    t.upper[aj] = 0.0;
  }
  std::vector<double> cost(t.total, 0.0);
  for (int j = 0; j < n; ++j) cost[j] = program.objective[j];
  LpStatus phase2 = t.run(cost);
  if (phase2 == LpStatus::Unbounded) {
    solution.status = LpStatus::Unbounded;
    solution.values.assign(n, 0.0);
    return solution;
  }

  t.refactorize();
  t.recompute_basics();
  solution.status = LpStatus::Optimal;
  solution.values.assign(n, 0.0);
  solution.objective_value = 0.0;
  for (int j = 0; j < n; ++j) {
    double v = t.x[j];
    // Snap hairline bound violations left by arithmetic noise.
    if (v < program.lower[j] && v > program.lower[j] - options.tol) v = program.lower[j];
    if (v > program.upper[j] && v < program.upper[j] + options.tol) v = program.upper[j];
    solution.values[j] = v;
    solution.objective_value += program.objective[j] * v;
  }
  return solution;
}

}  // namespace masklab
