#pragma once

#include <vector>

#include "masklab/errors.hpp"

namespace masklab {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::vector<double> coeffs;
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
};

/// Maximize objective . x subject to the constraints and per-variable
/// bounds. Bounds may be infinite on either side.
struct BoundedLinearProgram {
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;
  std::vector<double> lower;
  std::vector<double> upper;

  int n() const { return static_cast<int>(objective.size()); }
  void add_constraint(std::vector<double> coeffs, Relation rel, double rhs);
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status) noexcept;

struct LpSolution {
  std::vector<double> values;
  double objective_value = 0.0;
  LpStatus status = LpStatus::Infeasible;
};

struct LpOptions {
  double tol = 1e-9;     // feasibility and optimality tolerance
  int max_vars = 10000;  // structural-variable cap
};

/// Dense two-phase simplex on bounded variables, Bland's pivoting rule for
/// anti-cycling. Returns an optimal basic feasible solution, or the
/// Infeasible/Unbounded status; never throws for well-formed input.
/// Deterministic for a fixed program.
LpSolution solve_lp(const BoundedLinearProgram& program, const LpOptions& options = {});

}  // namespace masklab
