#include "exactmatch/exact_match.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exactmatch/errors.hpp"

namespace exactmatch {

const char* to_string(MatchMode mode) {
  return mode == MatchMode::Constrained ? "constrained" : "unconstrained";
}

MatchMode parse_match_mode(const std::string& text) {
  if (text == "unconstrained") return MatchMode::Unconstrained;
  if (text == "constrained") return MatchMode::Constrained;
  throw ConfigError("mode", "expected 'unconstrained' or 'constrained', got '" + text + "'");
}

const char* to_string(MatchStatus status) { return status == MatchStatus::Matched ? "Matched" : "NoSolution"; }

namespace {

constexpr double kRowDependence = 1e-9;
constexpr double kConsistency = 1e-8;
constexpr double kClamp = 1e-10;

std::vector<std::size_t> requested_columns(const DesignMatrix& dm, const MatchSpec& spec) {
  if (!spec.columns) {
    std::vector<std::size_t> all(dm.cols());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  if (spec.columns->empty()) throw ConfigError("columns", "covariate subset is empty");
  for (std::size_t c : *spec.columns) {
    if (c >= dm.cols()) throw ConfigError("columns", "column index " + std::to_string(c) + " out of range");
  }
  return *spec.columns;
}

bool constant_and_equal(const DesignMatrix& dm, std::size_t c) {
  const double ref = dm.n0() > 0 ? dm.x0(0, c) : dm.x1(0, c);
  const double tol = 1e-12 * std::max(1.0, std::abs(ref));
  for (std::size_t i = 0; i < dm.n0(); ++i)
    if (std::abs(dm.x0(i, c) - ref) > tol) return false;
  for (std::size_t i = 0; i < dm.n1(); ++i)
    if (std::abs(dm.x1(i, c) - ref) > tol) return false;
  return true;
}

double column_mean(const Matrix& x, std::size_t c) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, c);
  return s / static_cast<double>(x.rows());
}

// Equality system after removing rows that are linear combinations of
// earlier ones. Normalization rows go first so that dummy blocks summing to
// one are the rows that get removed.
struct ReducedEqualities {
  Matrix a;
  Vector c;
  bool consistent = true;
  // Minimum-norm point of the affine set, from the orthonormal basis.
  Vector min_norm_point;
};

ReducedEqualities reduce_equalities(const Matrix& eq_a, const Vector& eq_c, std::size_t first) {
  const std::size_t n = eq_a.rows();
  const std::size_t m = eq_c.size();
  std::vector<std::size_t> order;
  for (std::size_t k = first; k < m; ++k) order.push_back(k);
  for (std::size_t k = 0; k < first; ++k) order.push_back(k);

  std::vector<Vector> basis;
  Vector basis_rhs;
  std::vector<std::size_t> kept;
  ReducedEqualities out;
  for (std::size_t k : order) {
    Vector v = eq_a.col(k);
    const double original = norm2(v);
    double rhs = eq_c[k];
    double scale = std::abs(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const double r = dot(basis[j], v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= r * basis[j][i];
        rhs -= r * basis_rhs[j];
        scale += std::abs(r * basis_rhs[j]);
      }
    }
    const double residual = norm2(v);
    if (original == 0.0 || residual <= kRowDependence * original) {
      if (std::abs(rhs) > kConsistency * std::max(1.0, scale)) out.consistent = false;
      continue;
    }
    for (double& x : v) x /= residual;
    basis.push_back(std::move(v));
    basis_rhs.push_back(rhs / residual);
    kept.push_back(k);
  }
  out.a = Matrix(n, kept.size());
  out.c.resize(kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) out.a(i, j) = eq_a(i, kept[j]);
    out.c[j] = eq_c[kept[j]];
  }
  out.min_norm_point.assign(n, 0.0);
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) out.min_norm_point[i] += basis_rhs[j] * basis[j][i];
  return out;
}

}  // namespace

MatchQp build_qp(const DesignMatrix& dm, const MatchSpec& spec) {
  if (dm.n0() == 0 || dm.n1() == 0) throw SingleStudy("both studies need at least one patient");
  if (spec.max_weight && !(*spec.max_weight > 0.0)) throw ConfigError("max_weight", "must be positive");
  const std::size_t n0 = dm.n0();
  const std::size_t n = dm.n();

  std::vector<std::size_t> columns;
  std::vector<std::size_t> dropped;
  std::vector<std::string> warnings;
  for (std::size_t c : requested_columns(dm, spec)) {
    if (constant_and_equal(dm, c)) {
      dropped.push_back(c);
      warnings.push_back("DegenerateColumn: '" + dm.column_names[c] +
                         "' is constant and equal in both studies; dropped");
    } else {
      columns.push_back(c);
    }
  }
  const std::size_t p = columns.size();

  Matrix eq_a(n, p + 2);
  Vector eq_c(p + 2, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t c = columns[j];
    for (std::size_t i = 0; i < n0; ++i) eq_a(i, j) = -dm.x0(i, c);
    for (std::size_t i = 0; i < dm.n1(); ++i) eq_a(n0 + i, j) = dm.x1(i, c);
  }
  for (std::size_t i = 0; i < n; ++i) eq_a(i, i < n0 ? p : p + 1) = 1.0;
  eq_c[p] = 1.0;
  eq_c[p + 1] = 1.0;

  const bool constrained = spec.mode == MatchMode::Constrained;
  const std::size_t mi = n + (constrained ? 2 * p : 0) + (spec.max_weight ? n : 0);
  Matrix ineq_a(n, mi);
  Vector ineq_c(mi, 0.0);
  for (std::size_t i = 0; i < n; ++i) ineq_a(i, i) = 1.0;
  std::size_t k = n;
  if (constrained) {
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t c = columns[j];
      const double m0 = column_mean(dm.x0, c);
      const double m1 = column_mean(dm.x1, c);
      if (m0 == m1) {
        warnings.push_back("box for '" + dm.column_names[c] + "' has equal bounds; it acts as an equality");
      }
      for (std::size_t i = 0; i < n0; ++i) {
        ineq_a(i, k) = dm.x0(i, c);
        ineq_a(i, k + 1) = -dm.x0(i, c);
      }
      for (std::size_t i = 0; i < dm.n1(); ++i) {
        ineq_a(n0 + i, k) = dm.x1(i, c);
        ineq_a(n0 + i, k + 1) = -dm.x1(i, c);
      }
      ineq_c[k] = 2.0 * std::min(m0, m1);
      ineq_c[k + 1] = -2.0 * std::max(m0, m1);
      k += 2;
    }
  }
  if (spec.max_weight) {
    for (std::size_t i = 0; i < n; ++i) {
      ineq_a(i, k) = -1.0;
      ineq_c[k] = -*spec.max_weight;
      ++k;
    }
  }
  return MatchQp{QpProblem(Matrix::identity(n), Vector(n, 0.0), std::move(eq_a), std::move(eq_c), std::move(ineq_a),
                           std::move(ineq_c)),
                 std::move(columns), std::move(dropped), std::move(warnings)};
}

LpFeasibilityProblem build_lp(const DesignMatrix& dm, const MatchSpec& spec) {
  MatchQp built = build_qp(dm, spec);
  const QpProblem& qp = built.problem;
  const std::size_t n = qp.num_vars();
  const std::size_t extra = qp.num_ineq() - n;
  LpFeasibilityProblem lp{qp.eq_a(), qp.eq_c(), Matrix(n, extra), Vector(extra)};
  for (std::size_t k = 0; k < extra; ++k) {
    for (std::size_t i = 0; i < n; ++i) lp.ineq_a(i, k) = qp.ineq_a()(i, n + k);
    lp.ineq_c[k] = qp.ineq_c()[n + k];
  }
  return lp;
}

WeightSolution match(const DesignMatrix& dm, const MatchSpec& spec, const QpTolerances& tol) {
  MatchQp built = build_qp(dm, spec);
  const QpProblem& full = built.problem;
  const std::size_t n = full.num_vars();
  const std::size_t n0 = dm.n0();

  WeightSolution sol;
  sol.columns = built.columns;
  sol.warnings = built.warnings;
  sol.tolerances = tol;

  ReducedEqualities eq = reduce_equalities(full.eq_a(), full.eq_c(), built.columns.size());
  if (!eq.consistent) return sol;

  Vector w;
  if (eq.c.size() >= n) {
    // The equalities pin down a single point; it either satisfies the
    // inequalities or nothing does.
    const Vector slack = transpose_times(full.ineq_a(), eq.min_norm_point);
    for (std::size_t k = 0; k < slack.size(); ++k) {
      if (slack[k] - full.ineq_c()[k] < -kConsistency * (1.0 + std::abs(full.ineq_c()[k]))) return sol;
    }
    w = eq.min_norm_point;
  } else {
    QpProblem reduced(full.q(), full.b(), std::move(eq.a), std::move(eq.c), full.ineq_a(), full.ineq_c());
    QpSolution qs = solve_qp(reduced, tol);
    sol.iterations = qs.iterations;
    if (qs.status != QpStatus::Optimal) return sol;
    w = std::move(qs.w);
  }

  sol.status = MatchStatus::Matched;
  sol.min_raw_weight = *std::min_element(w.begin(), w.end());
  if (sol.min_raw_weight < -kClamp) {
    sol.warnings.push_back("solver returned weight " + std::to_string(sol.min_raw_weight) + " below clamp tolerance");
  }
  for (double& x : w) x = std::max(0.0, x);
  sol.weights[0].assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n0));
  sol.weights[1].assign(w.begin() + static_cast<std::ptrdiff_t>(n0), w.end());
  sol.objective = dot(w, w);
  for (int s = 0; s < 2; ++s) {
    sol.sums[s] = std::accumulate(sol.weights[s].begin(), sol.weights[s].end(), 0.0);
    sol.ess[s] = ess(sol.weights[s]);
    const Matrix& x = s == 0 ? dm.x0 : dm.x1;
    const Vector wx = transpose_times(x, sol.weights[s]);
    sol.weighted_means[s].resize(dm.cols());
    for (std::size_t c = 0; c < dm.cols(); ++c) sol.weighted_means[s][c] = wx[c] / sol.sums[s];
  }
  sol.ess_combined = ess(w);
  return sol;
}

double ess(std::span<const double> weights) {
  double s = 0.0;
  double s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  if (s2 == 0.0) throw AllZero("ess: all weights are zero");
  return s * s / s2;
}

Vector rescale(std::span<const double> weights, double total) {
  const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (s == 0.0) throw ZeroWeightSum("rescale: weights sum to zero");
  Vector out(weights.begin(), weights.end());
  for (double& w : out) w *= total / s;
  return out;
}

}  // namespace exactmatch
