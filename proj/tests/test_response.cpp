#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "exactmatch/errors.hpp"
#include "exactmatch/response.hpp"

using namespace exactmatch;
using Catch::Approx;

namespace {

double pop_var(const Vector& y) {
  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("uniform weights reduce to plain estimates") {
  Vector y0{1, 2, 3, 6}, y1{2, 2, 5};
  auto e = estimate_response(y0, Vector(4, 1.0), y1, Vector(3, 0.2));
  CHECK(e.mean[0] == Approx(3.0));
  CHECK(e.mean[1] == Approx(3.0));
  CHECK(e.s2[0] == Approx(pop_var(y0)));
  CHECK(e.var[0] == Approx(pop_var(y0) / 4.0));
  CHECK(e.var[1] == Approx(pop_var(y1) / 3.0));
  CHECK(e.ess[1] == Approx(3.0));
  CHECK(e.difference == Approx(0.0).margin(1e-15));
}

TEST_CASE("variance uses the inverse effective sample size") {
  Vector y{1, 2, 3};
  auto e = estimate_response(y, Vector{2, 1, 1}, y, Vector{1, 1, 1});
  CHECK(e.mean[0] == Approx(7.0 / 4.0));
  CHECK(e.var[0] == Approx(6.0 / 16.0 * pop_var(y)));
}

TEST_CASE("difference and interval") {
  Vector y0{0, 1, 2, 3}, y1{4, 6, 5, 9, 1};
  auto e = estimate_response(y0, Vector{1, 2, 1, 3}, y1, Vector{1, 1, 1, 1, 4}, 0.9);
  CHECK(e.difference == Approx(e.mean[1] - e.mean[0]));
  CHECK(e.se == Approx(std::sqrt(e.var[0] + e.var[1])));
  const double zq = boost::math::quantile(boost::math::normal(), 0.95);
  CHECK(e.ci_lower == Approx(e.difference - zq * e.se));
  CHECK(e.ci_upper == Approx(e.difference + zq * e.se));
  CHECK(e.ci_level == 0.9);
}

TEST_CASE("estimates do not depend on weight scale") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector y0(15), y1(12), w0(15), w1(12);
    for (double& v : y0) v = z(rng);
    for (double& v : y1) v = z(rng);
    for (double& v : w0) v = u(rng);
    for (double& v : w1) v = u(rng);
    auto a = estimate_response(y0, w0, y1, w1);
    const double c = std::exp(3.0 * z(rng));
    for (double& v : w0) v *= c;
    for (double& v : w1) v *= c;
    auto b = estimate_response(y0, w0, y1, w1);
    CHECK(a.mean[0] == Approx(b.mean[0]).epsilon(1e-12));
    CHECK(a.var[1] == Approx(b.var[1]).epsilon(1e-12));
  }
}

TEST_CASE("variance is never below the unweighted value") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector y(10), w(10);
    for (double& v : y) v = z(rng);
    for (double& v : w) v = u(rng) < 0.2 ? 0.0 : u(rng);
    w[0] = 1.0;
    auto e = estimate_response(y, w, y, Vector(10, 1.0));
    CHECK(e.var[0] >= e.s2[0] / 10.0 * (1.0 - 1e-12));
  }
}

TEST_CASE("response input validation") {
  CHECK_THROWS_AS(estimate_response(Vector{1, 2}, Vector{1}, Vector{1}, Vector{1}), DimensionMismatch);
  CHECK_THROWS(estimate_response(Vector{1}, Vector{0}, Vector{1}, Vector{1}));
  CHECK_THROWS(estimate_response(Vector{1}, Vector{1}, Vector{1}, Vector{1}, 1.5));
  CovariateTable t(CovariateSchema({{"x", CovariateKind::Continuous, {}}}), {0, 1}, Matrix{{0}, {1}}, std::nullopt);
  auto dm = encode(t);
  CHECK_THROWS_AS(estimate_response(t, dm, {Vector{1}, Vector{1}}), NoResponseColumn);
}

TEST_CASE("table overload follows the design row mapping") {
  CovariateTable t(CovariateSchema({{"x", CovariateKind::Continuous, {}}}), {1, 0, 1, 0}, Matrix{{0}, {1}, {2}, {3}},
                   Vector{10, 20, 30, 40});
  auto dm = encode(t);
  auto e = estimate_response(t, dm, {Vector{1, 1}, Vector{1, 3}});
  CHECK(e.mean[0] == Approx(30.0));
  CHECK(e.mean[1] == Approx(25.0));
}

TEST_CASE("difference summary") {
  auto one = difference_summary({0.7});
  CHECK(one.min == 0.7);
  CHECK(one.q1 == 0.7);
  CHECK(one.median == 0.7);
  CHECK(one.max == 0.7);
  CHECK(std::isnan(one.sd));

  auto two = difference_summary({-1.0, 1.0});
  CHECK(two.mean == 0.0);
  CHECK(two.sd == Approx(std::sqrt(2.0)));

  auto na = difference_summary({1.0, std::nullopt, 2.0, std::nullopt, 3.0, 4.0});
  CHECK(na.na == 2);
  CHECK(na.count == 4);
  CHECK(na.q1 == Approx(1.75));
  CHECK(na.median == Approx(2.5));
  CHECK(na.q3 == Approx(3.25));
  CHECK(na.mean == Approx(2.5));

  auto none = difference_summary({std::nullopt});
  CHECK(none.count == 0);
  CHECK(none.na == 1);
  CHECK(std::isnan(none.mean));
}
