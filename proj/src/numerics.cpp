#include "exactmatch/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "exactmatch/errors.hpp"

namespace exactmatch {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw DimensionMismatch("matrix entries: expected " + std::to_string(rows * cols) + ", got " +
                            std::to_string(data_.size()));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::require_finite(const char* what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw NonFiniteValue(std::string(what) + " contains a non-finite entry");
  }
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product: dimensions differ");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

Vector transpose_times(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw DimensionMismatch("transposed matrix-vector product: dimensions differ");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += xi * r[j];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double frobenius(const Matrix& m) { return norm2(m.entries()); }

Matrix CholeskyFactor::reconstruct() const {
  const std::size_t n = dim();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += lower_(i, k) * lower_(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

Vector CholeskyFactor::solve(std::span<const double> b) const {
  return solve_triangular(*this, solve_triangular(*this, b, false), true);
}

CholeskyFactor cholesky(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 0 || m.cols() != n) throw DimensionMismatch("cholesky: matrix must be square and non-empty");
  m.require_finite("cholesky input");

  double max_diag = 0.0;
  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
  for (double v : m.entries()) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * std::max(1.0, max_abs)) {
        throw DimensionMismatch("cholesky: matrix is not symmetric");
      }
    }

  // Envelope of each row: L keeps the zero prefix of the lower triangle.
  std::vector<std::size_t> first(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t f = 0;
    while (f < i && m(i, f) == 0.0) ++f;
    first[i] = f;
  }

  const double pivot_floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = first[j]; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor)) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " is " + std::to_string(d));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      if (first[i] > j) continue;
      double s = m(i, j);
      for (std::size_t k = std::max(first[i], first[j]); k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return CholeskyFactor(std::move(l));
}

Vector solve_triangular(const CholeskyFactor& factor, std::span<const double> b, bool transpose) {
  const Matrix& l = factor.lower();
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionMismatch("solve_triangular: rhs has wrong length");
  Vector y(b.begin(), b.end());
  if (!transpose) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = y[i];
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
      y[ii] = s / l(ii, ii);
    }
  }
  return y;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DimensionMismatch("quantile_sorted: no data");
  if (!(q >= 0.0 && q <= 1.0)) throw DimensionMismatch("quantile_sorted: probability outside [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace exactmatch
