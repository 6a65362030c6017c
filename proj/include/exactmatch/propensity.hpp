#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "exactmatch/data.hpp"

namespace exactmatch {

/// Full-rank design for estimation: intercept first, then every encoded
/// column except the first present level of each categorical.
struct EstimationDesign {
  Matrix x;  // n×q, study 0 rows then study 1 rows
  Vector z;  // study indicator
  std::vector<std::string> names;
  /// Encoded column feeding each non-intercept design column.
  std::vector<std::size_t> source_column;
};

EstimationDesign estimation_design(const DesignMatrix& dm);

struct LogisticModel {
  std::vector<std::string> names;
  /// Intercept first.
  Vector beta;
  bool converged = false;
  std::size_t iterations = 0;
  double max_abs_linear_predictor = 0.0;
  /// Largest |Xᵀ(z − p)| at the final iterate.
  double max_abs_score = 0.0;
  bool separation = false;
  /// Fitted probability of belonging to study 1; study 0 rows then study 1.
  Vector fitted;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

struct IrlsOptions {
  double score_tolerance = 1e-8;
  std::size_t max_iterations = 100;
  double separation_threshold = 15.0;
};

/// Throws RankDeficientDesign naming the first collinear column.
LogisticModel fit_logistic(const EstimationDesign& design, const IrlsOptions& options = {});
LogisticModel fit_logistic(const DesignMatrix& dm, const IrlsOptions& options = {});

struct Nu {
  enum class Kind { Observed, Half, Explicit };
  Kind kind = Kind::Observed;
  /// ν₀ when kind is Explicit; ν₁ = 1 − ν₀.
  double nu0 = 0.5;

  static Nu observed() { return {}; }
  static Nu half() { return {Kind::Half, 0.5}; }
  static Nu fixed(double nu0) { return {Kind::Explicit, nu0}; }
};

/// Parses "observed", "half", or a number in [0, 1] read as ν₀.
Nu parse_nu(const std::string& text);

struct PropensityWeights {
  /// Per study, in design-matrix row order.
  std::array<Vector, 2> p_hat;
  std::array<Vector, 2> raw;
  /// Normalized to sum 1 per study.
  std::array<Vector, 2> weights;
  std::array<double, 2> ess{0.0, 0.0};
  double nu0 = 0.5;
  double nu1 = 0.5;
  bool separation = false;
  std::optional<double> truncation_cap;
  std::vector<std::string> warnings;
};

/// Study 0: (p̂ν₁ + (1−p̂)ν₀)/(1−p̂). Study 1: (p̂ν₁ + (1−p̂)ν₀)/p̂.
/// With `truncate_quantile` set, raw weights above that pooled quantile are
/// capped before normalization.
PropensityWeights pooled_weights(const LogisticModel& model, Nu nu = Nu::observed(),
                                 std::optional<double> truncate_quantile = std::nullopt);

double propensity_weight(double p_hat, int study, double nu0, double nu1);

struct SaturatedCell {
  std::vector<std::size_t> levels;  // level index per covariate
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  double p_hat = 0.0;
};

struct SaturatedReport {
  std::vector<SaturatedCell> cells;
  /// Indices into `cells` occupied by only one study.
  std::vector<std::size_t> separation_cells;
  /// Per study, table row order within study; zero for separation cells.
  std::array<Vector, 2> weights;
  /// Weighted proportions per encoded column over doubly occupied cells.
  std::array<Vector, 2> weighted_means;
  std::vector<std::string> column_names;
  double max_abs_gap = 0.0;
};

/// Closed-form saturated model on an all-categorical (or binary) table:
/// p̂ = n₁,c / n_c per covariate-combination cell.
SaturatedReport saturated_exact_check(const CovariateTable& table, Nu nu = Nu::observed());

}  // namespace exactmatch
