#include "exactmatch/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "exactmatch/errors.hpp"

namespace exactmatch {

QpProblem::QpProblem(Matrix q, Vector b, Matrix eq_a, Vector eq_c, Matrix ineq_a, Vector ineq_c)
    : q_(std::move(q)),
      b_(std::move(b)),
      eq_a_(std::move(eq_a)),
      eq_c_(std::move(eq_c)),
      ineq_a_(std::move(ineq_a)),
      ineq_c_(std::move(ineq_c)) {
  const std::size_t n = q_.rows();
  if (n == 0 || q_.cols() != n) throw DimensionMismatch("QpProblem: Q must be square and non-empty");
  if (b_.size() != n) throw DimensionMismatch("QpProblem: b must have length n");
  // Empty blocks may arrive as 0×0; normalize them to n×0.
  if (eq_c_.empty() && eq_a_.empty()) eq_a_ = Matrix(n, 0);
  if (ineq_c_.empty() && ineq_a_.empty()) ineq_a_ = Matrix(n, 0);
  if (eq_a_.rows() != n || eq_a_.cols() != eq_c_.size()) {
    throw DimensionMismatch("QpProblem: eq_A must be n×m_e matching eq_c");
  }
  if (ineq_a_.rows() != n || ineq_a_.cols() != ineq_c_.size()) {
    throw DimensionMismatch("QpProblem: ineq_A must be n×m_i matching ineq_c");
  }
  q_.require_finite("Q");
  eq_a_.require_finite("eq_A");
  ineq_a_.require_finite("ineq_A");
  for (const Vector* v : {&b_, &eq_c_, &ineq_c_}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw NonFiniteValue("QpProblem: vector contains a non-finite entry");
    }
  }
  cholesky(q_);  // throws NotPositiveDefinite
}

double QpProblem::objective(std::span<const double> w) const { return dot(b_, w) + dot(w, q_ * w); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// One constraint expressed in whitened variables v (objective ½‖v‖² + aᵀv).
struct Row {
  bool equality = false;
  std::size_t source = 0;  // column index within its block
  double rhs = 0.0;
  std::size_t bound_var = kNone;  // set when the normal has a single nonzero
  double bound_coef = 0.0;
  Vector normal;  // dense normal, empty for bounds
  double normal_norm = 0.0;

  bool is_bound() const { return bound_var != kNone; }
};

// Change of variables v = Lᵀx with L·Lᵀ = 2Q. Diagonal Q keeps unit-vector
// constraints as unit vectors, which the active set exploits.
class Whitening {
 public:
  explicit Whitening(const Matrix& q) {
    const std::size_t n = q.rows();
    diagonal_ = true;
    for (std::size_t i = 0; i < n && diagonal_; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && q(i, j) != 0.0) {
          diagonal_ = false;
          break;
        }
    if (diagonal_) {
      scale_.resize(n);
      for (std::size_t i = 0; i < n; ++i) scale_[i] = std::sqrt(2.0 * q(i, i));
    } else {
      Matrix g(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) = 2.0 * q(i, j);
      factor_.emplace(cholesky(g));
    }
  }

  // n ↦ L⁻¹n, so that nᵀx = (L⁻¹n)ᵀv.
  Vector normal(std::span<const double> n) const {
    if (diagonal_) {
      Vector out(n.size());
      for (std::size_t i = 0; i < n.size(); ++i) out[i] = n[i] / scale_[i];
      return out;
    }
    return solve_triangular(*factor_, n, false);
  }

  Vector to_x(std::span<const double> v) const {
    if (diagonal_) {
      Vector out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / scale_[i];
      return out;
    }
    return solve_triangular(*factor_, v, true);
  }

 private:
  bool diagonal_ = true;
  Vector scale_;
  std::optional<CholeskyFactor> factor_;
};

Row make_row(const Whitening& wh, const Matrix& a, std::size_t col, double rhs, bool equality) {
  Row row;
  row.equality = equality;
  row.source = col;
  row.rhs = rhs;
  Vector nv = wh.normal(a.col(col));
  std::size_t nnz = 0;
  std::size_t last = kNone;
  for (std::size_t i = 0; i < nv.size(); ++i)
    if (nv[i] != 0.0) {
      ++nnz;
      last = i;
    }
  row.normal_norm = norm2(nv);
  if (nnz == 1) {
    row.bound_var = last;
    row.bound_coef = nv[last];
  } else {
    row.normal = std::move(nv);
  }
  return row;
}

// Small dense Cholesky on a row-major c×c buffer; returns false on a
// non-positive pivot.
bool factor_in_place(std::vector<double>& k, std::size_t c) {
  for (std::size_t j = 0; j < c; ++j) {
    double d = k[j * c + j];
    for (std::size_t p = 0; p < j; ++p) d -= k[j * c + p] * k[j * c + p];
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    k[j * c + j] = ljj;
    for (std::size_t i = j + 1; i < c; ++i) {
      double s = k[i * c + j];
      for (std::size_t p = 0; p < j; ++p) s -= k[i * c + p] * k[j * c + p];
      k[i * c + j] = s / ljj;
    }
  }
  return true;
}

void solve_in_place(const std::vector<double>& l, std::size_t c, Vector& y) {
  for (std::size_t i = 0; i < c; ++i) {
    double s = y[i];
    for (std::size_t p = 0; p < i; ++p) s -= l[i * c + p] * y[p];
    y[i] = s / l[i * c + i];
  }
  for (std::size_t i = c; i-- > 0;) {
    double s = y[i];
    for (std::size_t p = i + 1; p < c; ++p) s -= l[p * c + i] * y[p];
    y[i] = s / l[i * c + i];
  }
}

// Active set in whitened space. Bounds fix a variable; general constraints
// are handled through K = G_F·G_Fᵀ where G_F holds their normals restricted
// to the free variables.
class ActiveSet {
 public:
  ActiveSet(const std::vector<Row>& rows, std::size_t n) : rows_(rows), n_(n), fixed_by_(n, kNone) {}

  struct Direction {
    Vector z;        // primal step direction
    Vector r;        // dual step direction, indexed like entries()
    double z_dot_np = 0.0;
  };

  const std::vector<std::size_t>& entries() const { return entries_; }

  bool is_fixed(std::size_t var) const { return fixed_by_[var] != kNone; }

  Direction project(const Row& p, double sign) {
    refactor_if_needed();
    const std::size_t c = general_.size();

    // np restricted to free variables
    Vector vf(n_, 0.0);
    if (p.is_bound()) {
      if (!is_fixed(p.bound_var)) vf[p.bound_var] = sign * p.bound_coef;
    } else {
      for (std::size_t i = 0; i < n_; ++i)
        if (!is_fixed(i)) vf[i] = sign * p.normal[i];
    }

    Vector y(c, 0.0);
    Vector z = vf;
    if (c > 0) {
      for (int pass = 0; pass < 2; ++pass) {
        Vector rhs(c);
        for (std::size_t j = 0; j < c; ++j) rhs[j] = dot(rows_[general_[j]].normal, z);
        solve_in_place(chol_, c, rhs);
        for (std::size_t j = 0; j < c; ++j) {
          y[j] += rhs[j];
          const Vector& g = rows_[general_[j]].normal;
          const double yj = rhs[j];
          if (yj == 0.0) continue;
          for (std::size_t i = 0; i < n_; ++i) z[i] -= yj * g[i];
        }
        for (std::size_t i = 0; i < n_; ++i)
          if (is_fixed(i)) z[i] = 0.0;
      }
    }

    Direction dir;
    dir.r.assign(entries_.size(), 0.0);
    for (std::size_t a = 0; a < entries_.size(); ++a) {
      const Row& row = rows_[entries_[a]];
      if (!row.is_bound()) {
        dir.r[a] = y[general_pos_of(entries_[a])];
      } else {
        const std::size_t i = row.bound_var;
        double np_i = 0.0;
        if (p.is_bound()) {
          np_i = p.bound_var == i ? sign * p.bound_coef : 0.0;
        } else {
          np_i = sign * p.normal[i];
        }
        double s = np_i;
        for (std::size_t j = 0; j < c; ++j) s -= y[j] * rows_[general_[j]].normal[i];
        dir.r[a] = s / row.bound_coef;
      }
    }
    if (p.is_bound()) {
      dir.z_dot_np = z[p.bound_var] * sign * p.bound_coef;
    } else {
      dir.z_dot_np = sign * dot(z, p.normal);
    }
    dir.z = std::move(z);
    return dir;
  }

  void add(std::size_t row_id) {
    const Row& row = rows_[row_id];
    entries_.push_back(row_id);
    if (row.is_bound()) {
      const std::size_t i = row.bound_var;
      fixed_by_[i] = row_id;
      rank_one(i, -1.0);
    } else {
      const std::size_t c = general_.size();
      Vector col(c + 1, 0.0);
      for (std::size_t j = 0; j < c; ++j) col[j] = free_dot(row.normal, rows_[general_[j]].normal);
      col[c] = free_dot(row.normal, row.normal);
      for (std::size_t j = 0; j < c; ++j) {
        k_[j].push_back(col[j]);
      }
      k_.push_back(col);
      general_.push_back(row_id);
    }
    touch();
  }

  void drop(std::size_t entry_pos) {
    const std::size_t row_id = entries_[entry_pos];
    const Row& row = rows_[row_id];
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(entry_pos));
    if (row.is_bound()) {
      const std::size_t i = row.bound_var;
      fixed_by_[i] = kNone;
      rank_one(i, +1.0);
    } else {
      const std::size_t j = general_pos_of(row_id);
      general_.erase(general_.begin() + static_cast<std::ptrdiff_t>(j));
      k_.erase(k_.begin() + static_cast<std::ptrdiff_t>(j));
      for (auto& kr : k_) kr.erase(kr.begin() + static_cast<std::ptrdiff_t>(j));
    }
    touch();
  }

 private:
  std::size_t general_pos_of(std::size_t row_id) const {
    return static_cast<std::size_t>(std::find(general_.begin(), general_.end(), row_id) - general_.begin());
  }

  double free_dot(const Vector& a, const Vector& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      if (!is_fixed(i)) s += a[i] * b[i];
    return s;
  }

  void rank_one(std::size_t var, double sign) {
    const std::size_t c = general_.size();
    for (std::size_t a = 0; a < c; ++a) {
      const double ga = rows_[general_[a]].normal[var];
      if (ga == 0.0) continue;
      for (std::size_t b = 0; b < c; ++b) k_[a][b] += sign * ga * rows_[general_[b]].normal[var];
    }
  }

  void touch() {
    dirty_ = true;
    if (++updates_since_rebuild_ >= 64) rebuild();
  }

  void rebuild() {
    const std::size_t c = general_.size();
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        const double v = free_dot(rows_[general_[a]].normal, rows_[general_[b]].normal);
        k_[a][b] = v;
        k_[b][a] = v;
      }
    updates_since_rebuild_ = 0;
    dirty_ = true;
  }

  void refactor_if_needed() {
    if (!dirty_) return;
    const std::size_t c = general_.size();
    chol_.assign(c * c, 0.0);
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b) chol_[a * c + b] = k_[a][b];
    if (!factor_in_place(chol_, c)) {
      rebuild();
      for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b) chol_[a * c + b] = k_[a][b];
      if (!factor_in_place(chol_, c)) {
        throw NotPositiveDefinite("active constraint normals became linearly dependent");
      }
    }
    dirty_ = false;
  }

  const std::vector<Row>& rows_;
  std::size_t n_;
  std::vector<std::size_t> fixed_by_;
  std::vector<std::size_t> entries_;  // active rows in order of entry
  std::vector<std::size_t> general_;  // active non-bound rows, K ordering
  std::vector<Vector> k_;
  std::vector<double> chol_;
  bool dirty_ = true;
  std::size_t updates_since_rebuild_ = 0;
};

class DualActiveSet {
 public:
  DualActiveSet(const QpProblem& problem, const QpTolerances& tol)
      : problem_(problem), tol_(tol), whitening_(problem.q()) {
    const std::size_t n = problem.num_vars();
    Vector a = whitening_.normal(problem.b());
    v_.resize(n);
    for (std::size_t i = 0; i < n; ++i) v_[i] = -a[i];

    for (std::size_t e = 0; e < problem.num_eq(); ++e) {
      rows_.push_back(make_row(whitening_, problem.eq_a(), e, problem.eq_c()[e], true));
    }
    for (std::size_t k = 0; k < problem.num_ineq(); ++k) {
      rows_.push_back(make_row(whitening_, problem.ineq_a(), k, problem.ineq_c()[k], false));
    }
    u_.assign(rows_.size(), 0.0);
    sign_.assign(rows_.size(), 1.0);
    active_flag_.assign(rows_.size(), false);
    max_iterations_ = tol.iteration_factor * (n + problem.num_ineq());
    active_.emplace(rows_, n);
  }

  QpSolution run() {
    for (std::size_t e = 0; e < problem_.num_eq(); ++e) {
      const Row& row = rows_[e];
      if (row.normal_norm == 0.0) {
        throw DegenerateEqualities("equality " + std::to_string(e) + " has an all-zero normal");
      }
      sign_[e] = slack(row) > 0.0 ? -1.0 : 1.0;
      if (!add_constraint(e)) {
        throw DegenerateEqualities("equality " + std::to_string(e) + " is linearly dependent on earlier equalities");
      }
    }
    for (;;) {
      std::size_t p = kNone;
      double worst = 0.0;
      for (std::size_t id = problem_.num_eq(); id < rows_.size(); ++id) {
        if (active_flag_[id]) continue;
        const Row& row = rows_[id];
        const double s = slack(row);
        if (s < -violation_tolerance(row) && (p == kNone || s < worst)) {
          worst = s;
          p = id;
        }
      }
      if (p == kNone) break;
      if (rows_[p].normal_norm == 0.0 || !add_constraint(p)) return infeasible();
    }
    return optimal();
  }

 private:
  double slack(const Row& row) const {
    if (row.is_bound()) return row.bound_coef * v_[row.bound_var] - row.rhs;
    return dot(row.normal, v_) - row.rhs;
  }

  double violation_tolerance(const Row& row) const {
    double mag = 0.0;
    if (row.is_bound()) {
      mag = std::abs(row.bound_coef * v_[row.bound_var]);
    } else {
      for (std::size_t i = 0; i < v_.size(); ++i) mag += std::abs(row.normal[i] * v_[i]);
    }
    return tol_.violation * (1.0 + std::abs(row.rhs) + mag);
  }

  // Returns false when constraint p cannot be made active: no primal step
  // exists and no active inequality can be released.
  bool add_constraint(std::size_t p) {
    const Row& row = rows_[p];
    const double sign = sign_[p];
    double u_p = 0.0;
    for (;;) {
      if (++iterations_ > max_iterations_) {
        throw SolverStalled("dual active set exceeded " + std::to_string(max_iterations_) + " iterations");
      }
      auto dir = active_->project(row, sign);
      const auto& entries = active_->entries();
      for (std::size_t a = 0; a < entries.size(); ++a) dir.r[a] *= sign_[entries[a]];

      double t1 = kInf;
      std::size_t leave = kNone;
      for (std::size_t a = 0; a < entries.size(); ++a) {
        const std::size_t id = entries[a];
        if (rows_[id].equality || !(dir.r[a] > 0.0)) continue;
        const double ratio = u_[id] / dir.r[a];
        if (ratio < t1 || (ratio == t1 && leave != kNone && id < entries[leave])) {
          t1 = ratio;
          leave = a;
        }
      }

      double t2 = kInf;
      if (norm2(dir.z) > tol_.dependence * row.normal_norm && dir.z_dot_np > 0.0) {
        t2 = std::max(0.0, -sign * slack(row) / dir.z_dot_np);
      }

      if (t1 == kInf && t2 == kInf) return false;

      if (t2 == kInf) {
        for (std::size_t a = 0; a < entries.size(); ++a) u_[entries[a]] -= t1 * dir.r[a];
        u_p += t1;
        release(leave);
        continue;
      }

      const double t = std::min(t1, t2);
      for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += t * dir.z[i];
      for (std::size_t a = 0; a < entries.size(); ++a) u_[entries[a]] -= t * dir.r[a];
      u_p += t;
      if (t2 <= t1) {
        u_[p] = u_p;
        active_flag_[p] = true;
        active_->add(p);
        return true;
      }
      release(leave);
    }
  }

  void release(std::size_t entry_pos) {
    const std::size_t id = active_->entries()[entry_pos];
    u_[id] = 0.0;
    active_flag_[id] = false;
    active_->drop(entry_pos);
  }

  QpSolution infeasible() {
    QpSolution s;
    s.status = QpStatus::Infeasible;
    s.w = whitening_.to_x(v_);
    s.objective = std::numeric_limits<double>::quiet_NaN();
    s.lagrange_multipliers.assign(rows_.size(), 0.0);
    s.iterations = iterations_;
    return s;
  }

  QpSolution optimal() {
    QpSolution s;
    s.status = QpStatus::Optimal;
    s.w = whitening_.to_x(v_);
    s.objective = problem_.objective(s.w);
    s.lagrange_multipliers.assign(rows_.size(), 0.0);
    for (std::size_t id = 0; id < rows_.size(); ++id) {
      if (!active_flag_[id]) continue;
      s.lagrange_multipliers[id] = sign_[id] * u_[id];
      if (!rows_[id].equality) s.active_set.push_back(rows_[id].source);
    }
    std::sort(s.active_set.begin(), s.active_set.end());
    s.iterations = iterations_;
    return s;
  }

  const QpProblem& problem_;
  QpTolerances tol_;
  Whitening whitening_;
  std::vector<Row> rows_;
  Vector v_;
  Vector u_;
  Vector sign_;
  std::vector<bool> active_flag_;
  std::optional<ActiveSet> active_;
  std::size_t iterations_ = 0;
  std::size_t max_iterations_ = 0;
};

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpTolerances& tol) {
  if (problem.num_eq() >= problem.num_vars() && problem.num_eq() > 0) {
    throw DegenerateEqualities("at least as many equalities as variables");
  }
  return DualActiveSet(problem, tol).run();
}

double KktReport::max() const { return std::max({primal_residual, dual_violation, complementarity_gap}); }

KktReport check_kkt(const QpProblem& problem, const QpSolution& solution) {
  const std::size_t n = problem.num_vars();
  const std::size_t me = problem.num_eq();
  const std::size_t mi = problem.num_ineq();
  if (solution.w.size() != n || solution.lagrange_multipliers.size() != me + mi) {
    throw DimensionMismatch("check_kkt: solution does not match problem");
  }
  KktReport rep;
  const Vector eq_res = transpose_times(problem.eq_a(), solution.w);
  for (std::size_t e = 0; e < me; ++e) {
    rep.primal_residual = std::max(rep.primal_residual, std::abs(eq_res[e] - problem.eq_c()[e]));
  }
  const Vector ineq_val = transpose_times(problem.ineq_a(), solution.w);
  for (std::size_t k = 0; k < mi; ++k) {
    const double slack = ineq_val[k] - problem.ineq_c()[k];
    const double lambda = solution.lagrange_multipliers[me + k];
    rep.primal_residual = std::max(rep.primal_residual, std::max(0.0, -slack));
    rep.dual_violation = std::max(rep.dual_violation, std::max(0.0, -lambda));
    rep.complementarity_gap = std::max(rep.complementarity_gap, std::abs(lambda * slack));
  }
  // 2Qw + b − A_e·λ_e − A_i·λ_i
  Vector grad = problem.q() * solution.w;
  for (std::size_t i = 0; i < n; ++i) grad[i] = 2.0 * grad[i] + problem.b()[i];
  for (std::size_t i = 0; i < n; ++i) {
    double s = grad[i];
    for (std::size_t e = 0; e < me; ++e) s -= problem.eq_a()(i, e) * solution.lagrange_multipliers[e];
    for (std::size_t k = 0; k < mi; ++k) s -= problem.ineq_a()(i, k) * solution.lagrange_multipliers[me + k];
    rep.dual_violation = std::max(rep.dual_violation, std::abs(s));
  }
  return rep;
}

}  // namespace exactmatch
