#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "exactmatch/numerics.hpp"

namespace exactmatch {

enum class CovariateKind { Continuous, Binary, Categorical };

const char* to_string(CovariateKind kind);
CovariateKind parse_kind(const std::string& text);

struct Covariate {
  std::string name;
  CovariateKind kind = CovariateKind::Continuous;
  /// Categorical: the ordered level labels. Binary: optional pair of labels
  /// mapped to 0 and 1; empty means the column already holds 0/1.
  std::vector<std::string> levels;
};

class CovariateSchema {
 public:
  CovariateSchema() = default;
  /// Throws SchemaError on duplicate names, empty or duplicated level lists.
  explicit CovariateSchema(std::vector<Covariate> covariates);

  const std::vector<Covariate>& covariates() const { return covariates_; }
  std::size_t size() const { return covariates_.size(); }
  const Covariate& operator[](std::size_t i) const { return covariates_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;

 private:
  std::vector<Covariate> covariates_;
};

/// Everything needed to read a two-study CSV besides the data itself.
struct SchemaDirectives {
  CovariateSchema schema;
  std::string study_col;
  /// Labels mapped to study 0 and study 1. When absent, the first label seen
  /// becomes study 0.
  std::optional<std::string> study0;
  std::optional<std::string> study1;
  std::optional<std::string> response_col;
};

/// Parses the JSON sidecar:
/// {"covariates":[{"name":..,"kind":..,"levels":[..]}],"study_col":..,
///  "study0":..,"study1":..,"response_col":..}
SchemaDirectives parse_schema_json(const std::string& text);
SchemaDirectives read_schema_json(const std::filesystem::path& path);

/// Validated two-study dataset. Categorical values are stored as level
/// indices, binary values as 0/1.
class CovariateTable {
 public:
  CovariateTable(CovariateSchema schema, std::vector<int> study, Matrix values, std::optional<Vector> response,
                 std::array<std::string, 2> study_labels = {"0", "1"});

  const CovariateSchema& schema() const { return schema_; }
  std::size_t rows() const { return study_.size(); }
  const std::vector<int>& study() const { return study_; }
  const Matrix& values() const { return values_; }
  const std::optional<Vector>& response() const { return response_; }
  const std::array<std::string, 2>& study_labels() const { return study_labels_; }
  std::size_t count(int study) const;

  /// Row indices belonging to one study, in file order.
  std::vector<std::size_t> rows_of(int study) const;

 private:
  CovariateSchema schema_;
  std::vector<int> study_;
  Matrix values_;
  std::optional<Vector> response_;
  std::array<std::string, 2> study_labels_;
};

/// Field names of the first row, trimmed.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

CovariateTable read_csv(const std::filesystem::path& path, const SchemaDirectives& directives);
CovariateTable read_csv(std::istream& in, const SchemaDirectives& directives);

/// Which covariate (and level, for categoricals) an encoded column carries.
struct ColumnOrigin {
  std::size_t covariate = 0;
  std::optional<std::size_t> level;
  friend bool operator==(const ColumnOrigin&, const ColumnOrigin&) = default;
};

/// Numeric encoding split by study. Categoricals are overparameterized: one
/// indicator column per level.
struct DesignMatrix {
  Matrix x0;
  Matrix x1;
  std::vector<std::string> column_names;
  std::vector<ColumnOrigin> column_origin;
  /// Table row index of each row of x0 and x1.
  std::vector<std::size_t> rows0;
  std::vector<std::size_t> rows1;

  std::size_t cols() const { return column_names.size(); }
  std::size_t n0() const { return x0.rows(); }
  std::size_t n1() const { return x1.rows(); }
  std::size_t n() const { return n0() + n1(); }

  /// Keep only the listed columns, in the given order.
  DesignMatrix select(const std::vector<std::size_t>& columns) const;

  friend bool operator==(const DesignMatrix&, const DesignMatrix&) = default;
};

DesignMatrix encode(const CovariateTable& table);

/// Per-study column means on the encoded scale.
std::array<Vector, 2> observed_means(const DesignMatrix& dm);
std::array<Vector, 2> observed_means(const CovariateTable& table);

/// Means of the two studies pooled with weights n0 and n1.
Vector pooled_means(std::span<const double> mean0, std::span<const double> mean1, std::size_t n0, std::size_t n1);

}  // namespace exactmatch
