#pragma once

#include <optional>

#include "exactmatch/numerics.hpp"

namespace exactmatch {

/// Does some w ≥ 0 satisfy eq_Aᵀw = eq_c (and optionally ineq_Aᵀw ≥ ineq_c)?
/// Orientation matches QpProblem: constraint normals are columns.
struct LpFeasibilityProblem {
  Matrix eq_a;
  Vector eq_c;
  Matrix ineq_a;  // may be n×0
  Vector ineq_c;
};

struct LpResult {
  bool feasible = false;
  /// Present when feasible.
  std::optional<Vector> witness;
  /// Phase-1 optimum: sum of artificial variables.
  double artificial_sum = 0.0;
  std::size_t pivots = 0;
};

/// Phase-1 simplex with Bland's rule on a dense tableau.
/// Infeasible iff the phase-1 optimum exceeds `threshold`.
LpResult is_feasible(const LpFeasibilityProblem& problem, double threshold = 1e-8);

}  // namespace exactmatch
