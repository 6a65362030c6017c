#include "exactmatch/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "exactmatch/balance.hpp"
#include "exactmatch/errors.hpp"
#include "exactmatch/exact_match.hpp"

namespace exactmatch {

ResponseEstimate estimate_response(std::span<const double> y0, std::span<const double> w0, std::span<const double> y1,
                                   std::span<const double> w1, double ci_level) {
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci_level", "must lie in (0, 1)");
  if (y0.size() != w0.size() || y1.size() != w1.size()) {
    throw DimensionMismatch("estimate_response: weights do not match responses");
  }
  ResponseEstimate est;
  est.ci_level = ci_level;
  const std::span<const double> ys[2] = {y0, y1};
  const std::span<const double> ws[2] = {w0, w1};
  for (int s = 0; s < 2; ++s) {
    const auto y = ys[s];
    if (y.empty()) throw DimensionMismatch("estimate_response: empty study");
    est.mean[s] = weighted_mean(y, ws[s]);
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - ybar) * (v - ybar);
    est.s2[s] = ss / static_cast<double>(y.size());
    est.ess[s] = ess(ws[s]);
    est.var[s] = est.s2[s] / est.ess[s];
  }
  est.difference = est.mean[1] - est.mean[0];
  est.se = std::sqrt(est.var[0] + est.var[1]);
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + ci_level / 2.0);
  est.ci_lower = est.difference - z * est.se;
  est.ci_upper = est.difference + z * est.se;
  return est;
}

ResponseEstimate estimate_response(const CovariateTable& table, const DesignMatrix& dm,
                                   const std::array<Vector, 2>& weights, double ci_level) {
  if (!table.response()) throw NoResponseColumn("the table has no response column");
  const Vector& y = *table.response();
  Vector y0;
  Vector y1;
  for (std::size_t r : dm.rows0) y0.push_back(y.at(r));
  for (std::size_t r : dm.rows1) y1.push_back(y.at(r));
  return estimate_response(y0, weights[0], y1, weights[1], ci_level);
}

DistributionSummary difference_summary(const std::vector<std::optional<double>>& values) {
  DistributionSummary out;
  Vector v;
  for (const auto& x : values) {
    if (x && std::isfinite(*x)) {
      v.push_back(*x);
    } else {
      ++out.na;
    }
  }
  out.count = v.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (v.empty()) {
    out.min = out.q1 = out.median = out.mean = out.q3 = out.max = out.sd = nan;
    return out;
  }
  std::sort(v.begin(), v.end());
  out.min = v.front();
  out.max = v.back();
  out.q1 = quantile_sorted(v, 0.25);
  out.median = quantile_sorted(v, 0.5);
  out.q3 = quantile_sorted(v, 0.75);
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() < 2) {
    out.sd = nan;
  } else {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

}  // namespace exactmatch
