#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace ladle {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(LpStatus status) noexcept;

struct VariableBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
};

/// minimize cost . x  subject to  a_ub x <= b_ub,  lower <= x <= upper.
/// Lower bounds must be finite; upper bounds may be +inf.
struct LinearProgram {
  std::vector<double> cost;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
  std::vector<VariableBounds> bounds;  // empty: all variables in [0, +inf)
};

struct SimplexOptions {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  std::size_t max_iterations = 20000;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
  // a_ub x - b_ub per row at x. For an infeasible program x is the point that
  // minimizes total violation, so positive entries name the conflicting rows.
  std::vector<double> row_excess;
};

// Dense two-phase tableau simplex with Bland's rule.
LpSolution simplex_solve(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace ladle
