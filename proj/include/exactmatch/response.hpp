#pragma once

#include <array>
#include <optional>
#include <vector>

#include "exactmatch/data.hpp"

namespace exactmatch {

struct ResponseEstimate {
  std::array<double, 2> mean{0.0, 0.0};
  /// Σ(y − ȳ)²/n per study, unweighted.
  std::array<double, 2> s2{0.0, 0.0};
  /// s² / ESS per study.
  std::array<double, 2> var{0.0, 0.0};
  std::array<double, 2> ess{0.0, 0.0};
  /// μ̂₁ − μ̂₀.
  double difference = 0.0;
  double se = 0.0;
  double ci_level = 0.95;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

ResponseEstimate estimate_response(std::span<const double> y0, std::span<const double> w0, std::span<const double> y1,
                                   std::span<const double> w1, double ci_level = 0.95);

/// Uses the table's response column, split by the design's row mapping.
/// Throws NoResponseColumn when the table has none.
ResponseEstimate estimate_response(const CovariateTable& table, const DesignMatrix& dm,
                                   const std::array<Vector, 2>& weights, double ci_level = 0.95);

struct DistributionSummary {
  std::size_t count = 0;
  std::size_t na = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  /// Sample SD (n − 1 divisor); NaN with fewer than two values.
  double sd = 0.0;
};

/// Missing entries count as NA and are excluded from every statistic.
DistributionSummary difference_summary(const std::vector<std::optional<double>>& values);

}  // namespace exactmatch
