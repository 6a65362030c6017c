#pragma once

#include <cstddef>
#include <vector>

#include "exactmatch/numerics.hpp"

namespace exactmatch {

/// minimize bᵀw + wᵀQw  subject to  eq_Aᵀw = eq_c,  ineq_Aᵀw ≥ ineq_c.
///
/// Constraint normals are the columns of eq_A (n×m_e) and ineq_A (n×m_i).
/// The constructor checks shapes, finiteness and positive definiteness of Q.
class QpProblem {
 public:
  QpProblem(Matrix q, Vector b, Matrix eq_a, Vector eq_c, Matrix ineq_a, Vector ineq_c);

  std::size_t num_vars() const { return q_.rows(); }
  std::size_t num_eq() const { return eq_c_.size(); }
  std::size_t num_ineq() const { return ineq_c_.size(); }

  const Matrix& q() const { return q_; }
  const Vector& b() const { return b_; }
  const Matrix& eq_a() const { return eq_a_; }
  const Vector& eq_c() const { return eq_c_; }
  const Matrix& ineq_a() const { return ineq_a_; }
  const Vector& ineq_c() const { return ineq_c_; }

  double objective(std::span<const double> w) const;

 private:
  Matrix q_;
  Vector b_;
  Matrix eq_a_;
  Vector eq_c_;
  Matrix ineq_a_;
  Vector ineq_c_;
};

enum class QpStatus { Optimal, Infeasible };

struct QpSolution {
  QpStatus status = QpStatus::Infeasible;
  Vector w;
  double objective = 0.0;
  /// Indices into the inequality block, ascending.
  std::vector<std::size_t> active_set;
  /// Equalities first, then inequalities; zero for inactive inequalities.
  Vector lagrange_multipliers;
  std::size_t iterations = 0;
};

/// Numerical tolerances used by solve_qp. Reported alongside results.
struct QpTolerances {
  /// Relative threshold on the projected step below which a new constraint
  /// normal counts as linearly dependent on the active set.
  double dependence = 1e-10;
  /// Relative slack below which an inequality counts as violated.
  double violation = 1e-12;
  /// Iteration cap is this factor times (n + m_i).
  std::size_t iteration_factor = 50;
};

/// Goldfarb–Idnani dual active-set method.
///
/// Starts from the unconstrained minimizer, adds all equalities, then
/// repeatedly adds the most violated inequality (lowest index on ties),
/// taking partial dual steps and dropping constraints whose multiplier would
/// turn negative. Returns Infeasible when a violated constraint admits neither
/// a primal step nor a dual blocking constraint.
///
/// Throws DegenerateEqualities when an equality normal is linearly dependent
/// on those already active, and SolverStalled past the iteration cap.
QpSolution solve_qp(const QpProblem& problem, const QpTolerances& tol = {});

struct KktReport {
  double primal_residual = 0.0;
  double dual_violation = 0.0;
  double complementarity_gap = 0.0;
  double max() const;
};

/// Independent verification of the KKT conditions for an Optimal solution.
KktReport check_kkt(const QpProblem& problem, const QpSolution& solution);

}  // namespace exactmatch
