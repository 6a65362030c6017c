#include <catch_amalgamated.hpp>

#include <random>

#include "exactmatch/errors.hpp"
#include "exactmatch/lp.hpp"
#include "oracles.hpp"

using namespace exactmatch;

namespace {

using Points = std::vector<Vector>;

/// Balance system for two point clouds: −Σ w₀x + Σ w₁x = 0, Σ w₀ = 1, Σ w₁ = 1.
LpFeasibilityProblem balance_lp(const Points& a, const Points& b) {
  const std::size_t d = a.front().size();
  const std::size_t n = a.size() + b.size();
  LpFeasibilityProblem p{Matrix(n, d + 2), Vector(d + 2, 0.0), Matrix(n, 0), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = i < a.size();
    const Vector& x = first ? a[i] : b[i - a.size()];
    for (std::size_t j = 0; j < d; ++j) p.eq_a(i, j) = first ? -x[j] : x[j];
    p.eq_a(i, first ? d : d + 1) = 1.0;
  }
  p.eq_c[d] = 1.0;
  p.eq_c[d + 1] = 1.0;
  return p;
}

void check_witness(const LpFeasibilityProblem& p, const LpResult& r) {
  REQUIRE(r.witness.has_value());
  for (double w : *r.witness) CHECK(w >= 0.0);
  Vector lhs = transpose_times(p.eq_a, *r.witness);
  for (std::size_t k = 0; k < lhs.size(); ++k) CHECK(std::abs(lhs[k] - p.eq_c[k]) <= 1e-8);
}

}  // namespace

TEST_CASE("overlapping intervals are feasible") {
  auto p = balance_lp({{0}, {1}}, {{0.5}, {1.5}});
  auto r = is_feasible(p);
  CHECK(r.feasible);
  check_witness(p, r);
}

TEST_CASE("disjoint intervals are infeasible") {
  auto r = is_feasible(balance_lp({{0}, {1}}, {{2}, {3}}));
  CHECK_FALSE(r.feasible);
  CHECK_FALSE(r.witness.has_value());
  CHECK(r.artificial_sum > 1e-8);
}

TEST_CASE("overlapping triangles are feasible") {
  auto p = balance_lp({{0, 0}, {2, 0}, {0, 2}}, {{1, 1}, {3, 1}, {1, 3}});
  auto r = is_feasible(p);
  CHECK(r.feasible);
  check_witness(p, r);
}

TEST_CASE("touching hulls are feasible") {
  auto r = is_feasible(balance_lp({{0}, {1}}, {{1}, {2}}));
  CHECK(r.feasible);
}

TEST_CASE("inequality rows are honoured") {
  // w1 + w2 = 1, w1 ≥ 0.7, w2 ≥ 0.7 is infeasible; relaxing to 0.4 is feasible.
  LpFeasibilityProblem p{Matrix{{1}, {1}}, {1}, Matrix{{1, 0}, {0, 1}}, {0.7, 0.7}};
  CHECK_FALSE(is_feasible(p).feasible);
  p.ineq_c = {0.4, 0.4};
  auto r = is_feasible(p);
  REQUIRE(r.feasible);
  CHECK((*r.witness)[0] >= 0.4 - 1e-12);
  CHECK((*r.witness)[1] >= 0.4 - 1e-12);
}

TEST_CASE("negative right-hand sides") {
  LpFeasibilityProblem p{Matrix{{-1}, {-1}}, {-1}, Matrix(2, 0), {}};
  CHECK(is_feasible(p).feasible);
  p.eq_c = {1};
  CHECK_FALSE(is_feasible(p).feasible);
}

TEST_CASE("shape errors") {
  LpFeasibilityProblem p{Matrix(3, 2), {0}, Matrix(3, 0), {}};
  CHECK_THROWS_AS(is_feasible(p), DimensionMismatch);
}

TEST_CASE("agrees with a planar hull-intersection oracle") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  int feasible = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Points a(5, Vector(2)), b(4, Vector(2));
    std::vector<oracle::Pt> pa, pb;
    const double shift = 0.8 * static_cast<double>(trial % 6);
    for (auto& x : a) {
      x = {z(rng), z(rng)};
      pa.push_back({x[0], x[1]});
    }
    for (auto& x : b) {
      x = {z(rng) + shift, z(rng)};
      pb.push_back({x[0], x[1]});
    }
    const bool expected = oracle::hulls_intersect(pa, pb);
    const auto r = is_feasible(balance_lp(a, b));
    CHECK(r.feasible == expected);
    feasible += expected ? 1 : 0;
  }
  CHECK(feasible > 5);
  CHECK(feasible < 55);
}

TEST_CASE("degenerate balance systems do not cycle") {
  // Many repeated points produce degenerate pivots.
  Points a(12, Vector{1, 1}), b(12, Vector{1, 1});
  a[0] = {0, 0};
  b[0] = {2, 2};
  auto r = is_feasible(balance_lp(a, b));
  CHECK(r.feasible);
}
