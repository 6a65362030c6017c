#include <catch_amalgamated.hpp>

#include <random>

#include "exactmatch/balance.hpp"
#include "exactmatch/errors.hpp"
#include "exactmatch/exact_match.hpp"
#include "exactmatch/propensity.hpp"
#include "generators.hpp"

using namespace exactmatch;
using Catch::Approx;

TEST_CASE("weighted mean") {
  CHECK(weighted_mean(Vector{1, 2, 3}, Vector{1, 1, 1}) == Approx(2));
  CHECK(weighted_mean(Vector{0, 10}, Vector{3, 1}) == Approx(2.5));
  CHECK(weighted_mean(Vector{4, 7, 9}, Vector{0, 1, 0}) == 7);
  CHECK_THROWS_AS(weighted_mean(Vector{1, 2}, Vector{0, 0}), ZeroWeightSum);
  CHECK_THROWS_AS(weighted_mean(Vector{1, 2}, Vector{1}), DimensionMismatch);
}

TEST_CASE("weighted variance") {
  CHECK(weighted_variance(Vector{3, 3, 3}, Vector{1, 2, 3}) == 0);
  CHECK(weighted_variance(Vector{0, 2}, Vector{1, 1}) == Approx(1));
  CHECK(weighted_variance(Vector{0, 2}, Vector{1, 0}) == 0);
  CHECK_THROWS_AS(weighted_variance(Vector{1}, Vector{0}), ZeroWeightSum);
}

TEST_CASE("uniform weights give the plain mean") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(1 + static_cast<std::size_t>(trial));
    for (double& x : v) x = 5.0 * z(rng) + 2.0;
    double plain = 0.0;
    for (double x : v) plain += x;
    plain /= static_cast<double>(v.size());
    CHECK(weighted_mean(v, Vector(v.size(), 0.37)) == Approx(plain).margin(1e-12));
  }
}

TEST_CASE("standardized mean difference") {
  CHECK(smd(Vector{1, 2, 3}, Vector{3, 2, 1}) == 0);
  // Means 0 and 1, sample SD 1 in both studies.
  CHECK(smd(Vector{-1, 0, 1}, Vector{0, 1, 2}) == Approx(1.0));
  CHECK_THROWS_AS(smd(Vector{2, 2}, Vector{2, 2}), ZeroPooledSd);
  CHECK(smd(Vector{0, 2}, Vector{1, 1}, Vector{1, 3}, Vector{1, 1}) == Approx(1.0));
  CHECK_THROWS_AS(smd(Vector{0, 2}, Vector{1, 0}, Vector{1, 3}, Vector{0, 1}), ZeroPooledSd);
}

TEST_CASE("smd is affine invariant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(20), b(25), wa(20), wb(25);
    for (double& x : a) x = z(rng);
    for (double& x : b) x = z(rng) + 0.5;
    for (double& x : wa) x = std::abs(z(rng));
    for (double& x : wb) x = std::abs(z(rng));
    const double s = trial % 2 ? -3.7 : 0.02;
    const double t = 11.0 * z(rng);
    Vector a2 = a, b2 = b;
    for (double& x : a2) x = s * x + t;
    for (double& x : b2) x = s * x + t;
    CHECK(smd(a2, b2) == Approx(smd(a, b)).margin(1e-9));
    CHECK(smd(a2, wa, b2, wb) == Approx(smd(a, wa, b, wb)).margin(1e-9));
  }
}

TEST_CASE("balance table after exact matching") {
  std::mt19937_64 rng(19);
  auto t = gen::mixed_table(rng, 80, 90, 6, 0.3);
  auto dm = encode(t);
  auto u = match(dm, {});
  auto c = match(dm, {MatchMode::Constrained, std::nullopt, std::nullopt});
  REQUIRE(u.status == MatchStatus::Matched);
  auto ps = pooled_weights(fit_logistic(dm));
  std::vector<NamedWeights> methods{{"unconstrained", true, u.weights},
                                    {"constrained", true, c.status == MatchStatus::Matched
                                                              ? std::optional<std::array<Vector, 2>>(c.weights)
                                                              : std::nullopt},
                                    {"propensity", false, ps.weights}};
  auto rep = balance_table(dm, methods, {"A", "B"});
  CHECK(rep.n == std::array<std::size_t, 2>{80, 90});
  CHECK(rep.rows.size() == dm.cols());
  CHECK(rep.methods.size() == 3);
  CHECK(rep.methods[0].solved);
  CHECK(rep.methods[0].ess[0] == Approx(u.ess[0]));
  CHECK(rep.max_smd(0) <= 1e-8);
  if (c.status == MatchStatus::Matched) CHECK(rep.max_smd(1) <= 1e-8);
  for (const auto& row : rep.rows) {
    REQUIRE(row.methods.size() == 3);
    REQUIRE(row.methods[0].has_value());
    CHECK(row.methods[0]->mean[0] == Approx(row.methods[0]->mean[1]).margin(1e-8));
  }
}

TEST_CASE("identical studies have zero before-SMD") {
  std::vector<int> study{0, 0, 0, 1, 1, 1};
  Matrix values{{1}, {2}, {6}, {6}, {1}, {2}};
  CovariateTable t(CovariateSchema({{"x", CovariateKind::Continuous, {}}}), study, values, std::nullopt);
  auto dm = encode(t);
  auto rep = balance_table(dm, {{"uniform", false, std::array<Vector, 2>{Vector(3, 1.0), Vector{1, 2, 3}}}});
  CHECK(rep.rows[0].observed[0] == rep.rows[0].observed[1]);
  REQUIRE(rep.rows[0].smd_before.has_value());
  CHECK(*rep.rows[0].smd_before == 0.0);
}

TEST_CASE("unsolved methods and degenerate columns are not applicable") {
  std::vector<int> study{0, 0, 1, 1};
  Matrix values{{1, 0}, {1, 1}, {1, 0}, {1, 1}};
  CovariateTable t(CovariateSchema({{"k", CovariateKind::Continuous, {}}, {"x", CovariateKind::Continuous, {}}}),
                   study, values, std::nullopt);
  auto rep = balance_table(encode(t), {{"none", true, std::nullopt}});
  CHECK_FALSE(rep.rows[0].smd_before.has_value());
  CHECK_FALSE(rep.rows[0].methods[0].has_value());
  CHECK_FALSE(rep.methods[0].solved);
}

TEST_CASE("pooled mean outside the observed means is flagged") {
  std::vector<int> study{0, 0, 1, 1};
  Matrix values{{0}, {4}, {1}, {5}};
  CovariateTable t(CovariateSchema({{"x", CovariateKind::Continuous, {}}}), study, values, std::nullopt);
  auto dm = encode(t);
  // Observed means 2 and 3; weights giving 3.5 in both studies lie above both.
  std::array<Vector, 2> w{Vector{0.125, 0.875}, Vector{0.375, 0.625}};
  auto rep = balance_table(dm, {{"exact", true, w}});
  CHECK(rep.rows[0].methods[0]->mean[0] == Approx(3.5));
  CHECK(rep.rows[0].methods[0]->mean[1] == Approx(3.5));
  CHECK(rep.rows[0].outside_box);
  auto quiet = balance_table(dm, {{"ps", false, w}});
  CHECK_FALSE(quiet.rows[0].outside_box);
}
