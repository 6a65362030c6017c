#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "exactmatch/errors.hpp"
#include "exactmatch/qp.hpp"
#include "oracles.hpp"

using namespace exactmatch;
using Catch::Approx;

namespace {

Matrix columns(const std::vector<Vector>& normals, std::size_t n) {
  Matrix m(n, normals.size());
  for (std::size_t c = 0; c < normals.size(); ++c)
    for (std::size_t r = 0; r < n; ++r) m(r, c) = normals[c][r];
  return m;
}

QpProblem make(std::size_t n, const std::vector<Vector>& eq, const Vector& ce, const std::vector<Vector>& in,
               const Vector& ci) {
  return QpProblem(Matrix::identity(n), Vector(n, 0.0), columns(eq, n), ce, columns(in, n), ci);
}

}  // namespace

TEST_CASE("projection onto the affine hull of the simplex") {
  auto p = make(3, {{1, 1, 1}}, {1}, {}, {});
  auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  for (double w : s.w) CHECK(w == Approx(1.0 / 3.0));
  CHECK(s.objective == Approx(1.0 / 3.0));
  CHECK(check_kkt(p, s).max() <= 1e-12);
}

TEST_CASE("single active inequality") {
  auto p = make(2, {{1, 1}}, {1}, {{1, 0}}, {0.8});
  auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(s.w[0] == Approx(0.8));
  CHECK(s.w[1] == Approx(0.2));
  CHECK(s.active_set == std::vector<std::size_t>{0});
  CHECK(s.lagrange_multipliers[1] > 0.0);
  CHECK(check_kkt(p, s).max() <= 1e-9);
}

TEST_CASE("contradictory equalities are degenerate") {
  auto p = make(2, {{1, 1}, {1, 1}}, {1, 2}, {}, {});
  CHECK_THROWS_AS(solve_qp(p), DegenerateEqualities);
}

TEST_CASE("too many equalities are degenerate") {
  auto p = make(2, {{1, 0}, {0, 1}}, {1, 2}, {}, {});
  CHECK_THROWS_AS(solve_qp(p), DegenerateEqualities);
}

TEST_CASE("infeasible inequalities are reported, not thrown") {
  auto p = make(2, {{1, 1}}, {1}, {{1, 0}, {0, 1}}, {0.7, 0.7});
  auto s = solve_qp(p);
  CHECK(s.status == QpStatus::Infeasible);
}

TEST_CASE("problem construction validates input") {
  CHECK_THROWS_AS(QpProblem(Matrix::identity(2), Vector{0}, Matrix(2, 0), {}, Matrix(2, 0), {}), DimensionMismatch);
  CHECK_THROWS_AS(QpProblem(Matrix{{1, 0}, {0, 0}}, Vector{0, 0}, Matrix(2, 0), {}, Matrix(2, 0), {}),
                  NotPositiveDefinite);
  CHECK_THROWS_AS(QpProblem(Matrix::identity(2), Vector{0, std::nan("")}, Matrix(2, 0), {}, Matrix(2, 0), {}),
                  NonFiniteValue);
  CHECK_THROWS_AS(QpProblem(Matrix::identity(2), Vector{0, 0}, Matrix(3, 1), {1}, Matrix(2, 0), {}),
                  DimensionMismatch);
}

TEST_CASE("check_kkt flags a perturbed solution") {
  auto p = make(2, {{1, 1}}, {1}, {}, {});
  auto s = solve_qp(p);
  CHECK(check_kkt(p, s).max() == Approx(0.0).margin(1e-15));
  auto bad = s;
  for (double& w : bad.w) w += 0.01;
  CHECK(check_kkt(p, bad).primal_residual > 1e-3);
}

TEST_CASE("general Q and linear term") {
  // minimize -2w1 - 5w2 + w1² + 2w2² + w1w2 s.t. w1 + w2 ≤ 1 (as -w1 - w2 ≥ -1), w ≥ 0
  Matrix q{{1, 0.5}, {0.5, 2}};
  Vector b{-2, -5};
  Matrix ia = columns({{-1, -1}, {1, 0}, {0, 1}}, 2);
  QpProblem p(q, b, Matrix(2, 0), {}, ia, {-1, 0, 0});
  auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  auto ref = oracle::enumerate_qp({{1, 0.5}, {0.5, 2}}, b, {}, {}, {{-1, -1}, {1, 0}, {0, 1}}, {-1, 0, 0});
  REQUIRE(ref.feasible);
  CHECK(s.w[0] == Approx(ref.x[0]).margin(1e-9));
  CHECK(s.w[1] == Approx(ref.x[1]).margin(1e-9));
  CHECK(check_kkt(p, s).max() <= 1e-9);
}

TEST_CASE("random problems agree with active-set enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> nd(2, 6), md(0, 6);
  std::normal_distribution<double> z;
  int optimal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(nd(rng));
    const std::size_t me = std::min<std::size_t>(static_cast<std::size_t>(trial % 3), n - 1);
    const auto mi = static_cast<std::size_t>(md(rng));
    oracle::Mat ae(me, oracle::Vec(n)), ai(mi, oracle::Vec(n));
    oracle::Vec ce(me), ci(mi);
    for (auto& r : ae)
      for (auto& v : r) v = z(rng);
    for (auto& v : ce) v = z(rng);
    for (auto& r : ai)
      for (auto& v : r) v = z(rng);
    for (auto& v : ci) v = z(rng);
    oracle::Mat qi(n, oracle::Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) qi[i][i] = 1.0;

    auto p = make(n, ae, ce, ai, ci);
    auto s = solve_qp(p);
    auto ref = oracle::enumerate_qp(qi, oracle::Vec(n, 0.0), ae, ce, ai, ci);
    REQUIRE((s.status == QpStatus::Optimal) == ref.feasible);
    if (s.status != QpStatus::Optimal) continue;
    ++optimal;
    CHECK(s.objective == Approx(ref.objective).margin(1e-8));
    CHECK(check_kkt(p, s).max() <= 1e-7);
  }
  CHECK(optimal > 100);
}

TEST_CASE("dropping an active inequality never increases the objective") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5;
    std::vector<Vector> in(4, Vector(n));
    Vector ci(4);
    for (auto& r : in)
      for (auto& v : r) v = z(rng);
    for (auto& v : ci) v = u(rng);
    auto p = make(n, {{1, 1, 1, 1, 1}}, {1}, in, ci);
    auto s = solve_qp(p);
    if (s.status != QpStatus::Optimal) continue;
    for (std::size_t a : s.active_set) {
      auto in2 = in;
      auto ci2 = ci;
      in2.erase(in2.begin() + static_cast<std::ptrdiff_t>(a));
      ci2.erase(ci2.begin() + static_cast<std::ptrdiff_t>(a));
      auto s2 = solve_qp(make(n, {{1, 1, 1, 1, 1}}, {1}, in2, ci2));
      REQUIRE(s2.status == QpStatus::Optimal);
      CHECK(s2.objective <= s.objective + 1e-12);
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("solution does not depend on inequality order") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6;
    std::vector<Vector> in(6, Vector(n));
    Vector ci(6);
    for (auto& r : in)
      for (auto& v : r) v = z(rng);
    for (auto& v : ci) v = z(rng);
    auto s = solve_qp(make(n, {{1, 1, 1, 1, 1, 1}}, {1}, in, ci));
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vector> in2;
    Vector ci2;
    for (auto k : perm) {
      in2.push_back(in[k]);
      ci2.push_back(ci[k]);
    }
    auto s2 = solve_qp(make(n, {{1, 1, 1, 1, 1, 1}}, {1}, in2, ci2));
    REQUIRE(s.status == s2.status);
    if (s.status != QpStatus::Optimal) continue;
    for (std::size_t i = 0; i < n; ++i) CHECK(s.w[i] == Approx(s2.w[i]).margin(1e-9));
  }
}

TEST_CASE("nonnegativity bounds with many variables") {
  // Projection of a point onto the probability simplex.
  const std::size_t n = 40;
  std::vector<Vector> in;
  for (std::size_t i = 0; i < n; ++i) {
    Vector e(n, 0.0);
    e[i] = 1.0;
    in.push_back(e);
  }
  Vector b(n);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (auto& v : b) v = z(rng);
  QpProblem p(Matrix::identity(n), b, columns({Vector(n, 1.0)}, n), {1}, columns(in, n), Vector(n, 0.0));
  auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(check_kkt(p, s).max() <= 1e-9);
  // Closed form: w = max(-b/2 - tau, 0) with tau chosen so Σw = 1.
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = -b[i] / 2.0;
  Vector sorted = y;
  std::sort(sorted.rbegin(), sorted.rend());
  double cum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cum += sorted[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0) tau = t;
  }
  for (std::size_t i = 0; i < n; ++i) CHECK(s.w[i] == Approx(std::max(y[i] - tau, 0.0)).margin(1e-10));
}
