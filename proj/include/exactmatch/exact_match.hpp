#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "exactmatch/data.hpp"
#include "exactmatch/lp.hpp"
#include "exactmatch/qp.hpp"

namespace exactmatch {

enum class MatchMode { Unconstrained, Constrained };

const char* to_string(MatchMode mode);
MatchMode parse_match_mode(const std::string& text);

struct MatchSpec {
  MatchMode mode = MatchMode::Unconstrained;
  /// Encoded columns to balance; unset means all of them.
  std::optional<std::vector<std::size_t>> columns;
  /// Upper bound on any single weight (each study's weights sum to 1).
  std::optional<double> max_weight;
};

/// The constraint system handed to the QP solver plus bookkeeping.
struct MatchQp {
  QpProblem problem;
  /// Encoded columns that produced balance rows, in row order.
  std::vector<std::size_t> columns;
  /// Columns dropped because they are constant and equal in both studies.
  std::vector<std::size_t> dropped_columns;
  std::vector<std::string> warnings;
};

/// Q = I, b = 0. Equalities: one balance row per kept column, then the two
/// per-study normalization rows. Inequalities: w ≥ 0, then in constrained
/// mode a lower and an upper box row per kept column, then optional caps.
MatchQp build_qp(const DesignMatrix& dm, const MatchSpec& spec);

/// The same constraints as a phase-1 feasibility problem.
LpFeasibilityProblem build_lp(const DesignMatrix& dm, const MatchSpec& spec);

enum class MatchStatus { Matched, NoSolution };

const char* to_string(MatchStatus status);

struct WeightSolution {
  MatchStatus status = MatchStatus::NoSolution;
  /// Per-study weights, clamped at 0 and each summing to 1. Empty on NoSolution.
  std::array<Vector, 2> weights;
  std::array<double, 2> sums{0.0, 0.0};
  std::array<double, 2> ess{0.0, 0.0};
  double ess_combined = 0.0;
  /// ‖w‖² over both studies.
  double objective = 0.0;
  /// Smallest weight returned by the solver before clamping.
  double min_raw_weight = 0.0;
  /// Weighted means of every encoded column, per study.
  std::array<Vector, 2> weighted_means;
  std::vector<std::size_t> columns;
  std::vector<std::string> warnings;
  std::size_t iterations = 0;
  QpTolerances tolerances;
};

WeightSolution match(const DesignMatrix& dm, const MatchSpec& spec, const QpTolerances& tol = {});

/// (Σw)² / Σw². Throws AllZero when every weight is 0.
double ess(std::span<const double> weights);

/// Rescales weights to sum to `total` (100 for plots, n for standardized weights).
Vector rescale(std::span<const double> weights, double total);

}  // namespace exactmatch
