#include "exactmatch/lp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "exactmatch/errors.hpp"

namespace exactmatch {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;

}  // namespace

LpResult is_feasible(const LpFeasibilityProblem& problem, double threshold) {
  const std::size_t n = problem.eq_a.rows() > 0 ? problem.eq_a.rows() : problem.ineq_a.rows();
  const std::size_t me = problem.eq_c.size();
  const std::size_t mi = problem.ineq_c.size();
  if ((me > 0 && (problem.eq_a.rows() != n || problem.eq_a.cols() != me)) ||
      (mi > 0 && (problem.ineq_a.rows() != n || problem.ineq_a.cols() != mi))) {
    throw DimensionMismatch("is_feasible: constraint blocks do not agree in shape");
  }
  problem.eq_a.require_finite("eq_A");
  problem.ineq_a.require_finite("ineq_A");

  const std::size_t m = me + mi;
  // Columns: w (n) | surplus (mi) | artificial (m) | rhs
  const std::size_t n_struct = n + mi;
  const std::size_t width = n_struct + m + 1;
  const std::size_t rhs = width - 1;
  Matrix t(m + 1, width);  // last row holds reduced costs

  for (std::size_t r = 0; r < m; ++r) {
    const bool eq = r < me;
    const std::size_t k = eq ? r : r - me;
    double c = eq ? problem.eq_c[k] : problem.ineq_c[k];
    if (!std::isfinite(c)) throw NonFiniteValue("is_feasible: rhs is not finite");
    for (std::size_t j = 0; j < n; ++j) t(r, j) = eq ? problem.eq_a(j, k) : problem.ineq_a(j, k);
    if (!eq) t(r, n + k) = -1.0;
    t(r, rhs) = c;
    if (c < 0.0) {
      for (std::size_t j = 0; j < n_struct; ++j) t(r, j) = -t(r, j);
      t(r, rhs) = -c;
    }
    t(r, n_struct + r) = 1.0;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) basis[r] = n_struct + r;
  for (std::size_t j = 0; j < width; ++j) {
    if (j >= n_struct && j < n_struct + m) continue;
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) s += t(r, j);
    t(m, j) = -s;
  }

  LpResult result;
  const std::size_t max_pivots = 100 * (width + m) + 1000;
  for (;;) {
    std::size_t enter = width;
    for (std::size_t j = 0; j < n_struct + m; ++j) {
      if (t(m, j) < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter == width) break;

    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double a = t(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, t(r, rhs)) / a;
      if (leave == m || ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == m) break;  // unbounded direction cannot occur in phase 1

    if (++result.pivots > max_pivots) throw SolverStalled("phase-1 simplex exceeded pivot limit");
    const double piv = t(leave, enter);
    auto prow = t.row(leave);
    for (double& x : prow) x /= piv;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = t(r, enter);
      if (f == 0.0) continue;
      auto row = t.row(r);
      for (std::size_t j = 0; j < width; ++j) row[j] -= f * prow[j];
      if (r < m && row[rhs] < 0.0) row[rhs] = 0.0;
    }
    basis[leave] = enter;
  }

  double art = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    if (basis[r] >= n_struct) art += std::max(0.0, t(r, rhs));
  result.artificial_sum = art;
  result.feasible = art <= threshold;
  if (result.feasible) {
    Vector w(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
      if (basis[r] < n) w[basis[r]] = std::max(0.0, t(r, rhs));
    result.witness = std::move(w);
  }
  return result;
}

}  // namespace exactmatch
