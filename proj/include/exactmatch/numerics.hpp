#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace exactmatch {

using Vector = std::vector<double>;

/// Dense row-major matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vector entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector col(std::size_t c) const;

  const Vector& entries() const { return data_; }

  Matrix transposed() const;

  /// Throws NonFiniteValue on NaN/Inf.
  void require_finite(const char* what) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
/// aᵀ·x without forming the transpose.
Vector transpose_times(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
double frobenius(const Matrix& m);

/// Lower-triangular L with L·Lᵀ equal to the factorized matrix.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}
  std::size_t dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }
  Matrix reconstruct() const;
  /// Solves (L·Lᵀ)·x = b.
  Vector solve(std::span<const double> b) const;

 private:
  Matrix lower_;
};

/// Throws NotPositiveDefinite if a pivot falls below n·eps·max|diag|, and
/// DimensionMismatch for non-square or asymmetric input.
CholeskyFactor cholesky(const Matrix& m);

/// Sample quantile of sorted data with linear interpolation between order
/// statistics (the default "type 7" rule of common statistics packages).
double quantile_sorted(std::span<const double> sorted, double q);

/// Solves L·y = b, or Lᵀ·y = b when `transpose` is set.
Vector solve_triangular(const CholeskyFactor& factor, std::span<const double> b, bool transpose);

}  // namespace exactmatch
