#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exactmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

// qp_solver
class DegenerateEqualities : public Error {
 public:
  using Error::Error;
};

class SolverStalled : public Error {
 public:
  using Error::Error;
};

// data_model
class SchemaError : public Error {
 public:
  using Error::Error;
};

class CsvError : public Error {
 public:
  using Error::Error;
};

/// A cell is empty. Row is 1-based over data rows (header excluded).
class MissingValue : public Error {
 public:
  MissingValue(std::size_t row, std::string column)
      : Error("missing value at row " + std::to_string(row) + ", column '" + column + "'"),
        row_(row),
        column_(std::move(column)) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class UnknownLevel : public Error {
 public:
  UnknownLevel(std::size_t row, std::string column, std::string value)
      : Error("unknown level '" + value + "' at row " + std::to_string(row) + ", column '" + column + "'"),
        row_(row),
        column_(std::move(column)),
        value_(std::move(value)) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }
  const std::string& value() const { return value_; }

 private:
  std::size_t row_;
  std::string column_;
  std::string value_;
};

class SingleStudy : public Error {
 public:
  using Error::Error;
};

// exact_match
class AllZero : public Error {
 public:
  using Error::Error;
};

// propensity
class RankDeficientDesign : public Error {
 public:
  RankDeficientDesign(std::string column)
      : Error("design column '" + column + "' is collinear with preceding columns"), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

// balance_diagnostics
class ZeroWeightSum : public Error {
 public:
  using Error::Error;
};

class ZeroPooledSd : public Error {
 public:
  using Error::Error;
};

// response_inference
class NoResponseColumn : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace exactmatch
