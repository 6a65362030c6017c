#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "exactmatch/data.hpp"

namespace exactmatch {

/// Σwx / Σw. Throws ZeroWeightSum.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Σw(x − x̄*)² / Σw.
double weighted_variance(std::span<const double> values, std::span<const double> weights);

/// |x̄₁ − x̄₀| over the pooled SD with (n−1) divisors. Throws ZeroPooledSd.
double smd(std::span<const double> x0, std::span<const double> x1);

/// Weighted version: weighted means over √((s*₀² + s*₁²)/2).
double smd(std::span<const double> x0, std::span<const double> w0, std::span<const double> x1,
           std::span<const double> w1);

/// One weighting scheme to report. `weights` unset means the method found no
/// solution.
struct NamedWeights {
  std::string name;
  bool exact = false;
  std::optional<std::array<Vector, 2>> weights;
};

struct MethodColumn {
  std::array<double, 2> mean{0.0, 0.0};
  /// Absolute SMD after weighting; unset when the pooled SD is zero.
  std::optional<double> smd;
};

struct BalanceRow {
  std::string column;
  std::array<double, 2> observed{0.0, 0.0};
  std::optional<double> smd_before;
  /// Parallel to BalanceReport::methods; unset for methods without a solution.
  std::vector<std::optional<MethodColumn>> methods;
  /// Some exact method's pooled weighted mean lies outside the two observed means.
  bool outside_box = false;
};

struct MethodStudy {
  std::string name;
  bool exact = false;
  bool solved = false;
  std::array<double, 2> ess{0.0, 0.0};
};

struct BalanceReport {
  std::array<std::size_t, 2> n{0, 0};
  std::array<std::string, 2> study_labels;
  std::vector<MethodStudy> methods;
  std::vector<BalanceRow> rows;
  std::string variance_rule = "weighted variance sum w(x - mean)^2 / sum w; weighted pooled SD sqrt((s0^2 + s1^2) / 2)";

  /// Largest after-weighting |SMD| of one method over columns with a defined SMD.
  double max_smd(std::size_t method) const;
};

BalanceReport balance_table(const DesignMatrix& dm, const std::vector<NamedWeights>& methods,
                            std::array<std::string, 2> study_labels = {"0", "1"});

}  // namespace exactmatch
