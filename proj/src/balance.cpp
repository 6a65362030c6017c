#include "exactmatch/balance.hpp"

#include <algorithm>
#include <cmath>

#include "exactmatch/errors.hpp"
#include "exactmatch/exact_match.hpp"

namespace exactmatch {

namespace {

constexpr double kBoxTolerance = 1e-8;

void check_lengths(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw DimensionMismatch("values and weights differ in length");
}

double plain_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = plain_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  check_lengths(values, weights);
  double sw = 0.0;
  double swx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    swx += weights[i] * values[i];
  }
  if (!(sw > 0.0)) throw ZeroWeightSum("weighted_mean: weights sum to zero");
  return swx / sw;
}

double weighted_variance(std::span<const double> values, std::span<const double> weights) {
  const double m = weighted_mean(values, weights);
  double sw = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    s += weights[i] * (values[i] - m) * (values[i] - m);
  }
  return s / sw;
}

double smd(std::span<const double> x0, std::span<const double> x1) {
  if (x0.empty() || x1.empty()) throw DimensionMismatch("smd: empty study");
  const double n0 = static_cast<double>(x0.size());
  const double n1 = static_cast<double>(x1.size());
  const double dof = n0 + n1 - 2.0;
  const double pooled =
      dof > 0.0 ? std::sqrt(((n0 - 1.0) * sample_variance(x0) + (n1 - 1.0) * sample_variance(x1)) / dof) : 0.0;
  if (!(pooled > 0.0)) throw ZeroPooledSd("smd: pooled standard deviation is zero");
  return std::abs(plain_mean(x1) - plain_mean(x0)) / pooled;
}

double smd(std::span<const double> x0, std::span<const double> w0, std::span<const double> x1,
           std::span<const double> w1) {
  const double pooled = std::sqrt((weighted_variance(x0, w0) + weighted_variance(x1, w1)) / 2.0);
  if (!(pooled > 0.0)) throw ZeroPooledSd("smd: weighted pooled standard deviation is zero");
  return std::abs(weighted_mean(x1, w1) - weighted_mean(x0, w0)) / pooled;
}

double BalanceReport::max_smd(std::size_t method) const {
  double m = 0.0;
  for (const auto& row : rows) {
    const auto& col = row.methods.at(method);
    if (col && col->smd) m = std::max(m, *col->smd);
  }
  return m;
}

BalanceReport balance_table(const DesignMatrix& dm, const std::vector<NamedWeights>& methods,
                            std::array<std::string, 2> study_labels) {
  BalanceReport rep;
  rep.n = {dm.n0(), dm.n1()};
  rep.study_labels = std::move(study_labels);
  for (const auto& m : methods) {
    MethodStudy ms{m.name, m.exact, m.weights.has_value(), {0.0, 0.0}};
    if (m.weights) {
      if ((*m.weights)[0].size() != dm.n0() || (*m.weights)[1].size() != dm.n1()) {
        throw DimensionMismatch("balance_table: weights for '" + m.name + "' do not match the design");
      }
      ms.ess = {ess((*m.weights)[0]), ess((*m.weights)[1])};
    }
    rep.methods.push_back(std::move(ms));
  }

  for (std::size_t c = 0; c < dm.cols(); ++c) {
    BalanceRow row;
    row.column = dm.column_names[c];
    const Vector x0 = dm.x0.col(c);
    const Vector x1 = dm.x1.col(c);
    row.observed = {plain_mean(x0), plain_mean(x1)};
    try {
      row.smd_before = smd(x0, x1);
    } catch (const ZeroPooledSd&) {
    }
    const double lo = std::min(row.observed[0], row.observed[1]);
    const double hi = std::max(row.observed[0], row.observed[1]);
    for (const auto& m : methods) {
      if (!m.weights) {
        row.methods.emplace_back();
        continue;
      }
      const auto& w = *m.weights;
      MethodColumn mc;
      mc.mean = {weighted_mean(x0, w[0]), weighted_mean(x1, w[1])};
      try {
        mc.smd = smd(x0, w[0], x1, w[1]);
      } catch (const ZeroPooledSd&) {
      }
      if (m.exact) {
        const double pooled = (mc.mean[0] + mc.mean[1]) / 2.0;
        if (pooled < lo - kBoxTolerance || pooled > hi + kBoxTolerance) row.outside_box = true;
      }
      row.methods.emplace_back(mc);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace exactmatch
