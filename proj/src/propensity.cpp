#include "exactmatch/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "exactmatch/errors.hpp"

namespace exactmatch {

namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void check_full_rank(const EstimationDesign& d) {
  const std::size_t n = d.x.rows();
  const std::size_t q = d.x.cols();
  std::vector<Vector> basis;
  for (std::size_t j = 0; j < q; ++j) {
    Vector v = d.x.col(j);
    const double original = norm2(v);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double r = dot(b, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= r * b[i];
      }
    }
    const double residual = norm2(v);
    if (original == 0.0 || residual <= 1e-9 * original) throw RankDeficientDesign(d.names[j]);
    for (double& x : v) x /= residual;
    basis.push_back(std::move(v));
  }
}

}  // namespace

EstimationDesign estimation_design(const DesignMatrix& dm) {
  std::vector<std::size_t> keep;
  std::map<std::size_t, bool> reference_taken;
  for (std::size_t c = 0; c < dm.cols(); ++c) {
    const auto& origin = dm.column_origin[c];
    if (origin.level) {
      bool present = false;
      for (std::size_t i = 0; i < dm.n0() && !present; ++i) present = dm.x0(i, c) != 0.0;
      for (std::size_t i = 0; i < dm.n1() && !present; ++i) present = dm.x1(i, c) != 0.0;
      if (!present) continue;
      if (!reference_taken[origin.covariate]) {
        reference_taken[origin.covariate] = true;
        continue;
      }
    }
    keep.push_back(c);
  }
  EstimationDesign d;
  const std::size_t n = dm.n();
  d.x = Matrix(n, keep.size() + 1);
  d.z.assign(n, 0.0);
  d.names.push_back("(Intercept)");
  for (std::size_t c : keep) {
    d.names.push_back(dm.column_names[c]);
    d.source_column.push_back(c);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool second = i >= dm.n0();
    const Matrix& x = second ? dm.x1 : dm.x0;
    const std::size_t r = second ? i - dm.n0() : i;
    d.x(i, 0) = 1.0;
    for (std::size_t k = 0; k < keep.size(); ++k) d.x(i, k + 1) = x(r, keep[k]);
    d.z[i] = second ? 1.0 : 0.0;
  }
  return d;
}

LogisticModel fit_logistic(const EstimationDesign& design, const IrlsOptions& options) {
  const Matrix& x = design.x;
  const std::size_t n = x.rows();
  const std::size_t q = x.cols();
  if (design.z.size() != n || design.names.size() != q) throw DimensionMismatch("fit_logistic: design shapes differ");
  x.require_finite("design");

  LogisticModel model;
  model.names = design.names;
  for (double z : design.z) (z == 1.0 ? model.n1 : model.n0)++;
  if (model.n0 == 0 || model.n1 == 0) throw SingleStudy("fit_logistic: both studies need at least one patient");
  check_full_rank(design);

  model.beta.assign(q, 0.0);
  model.beta[0] = std::log(static_cast<double>(model.n1) / static_cast<double>(model.n0));
  Vector eta(n);
  Vector p(n);
  Vector score(q);

  auto evaluate = [&] {
    eta = x * model.beta;
    for (std::size_t i = 0; i < n; ++i) p[i] = sigmoid(eta[i]);
    std::fill(score.begin(), score.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = design.z[i] - p[i];
      const auto row = x.row(i);
      for (std::size_t j = 0; j < q; ++j) score[j] += row[j] * r;
    }
    model.max_abs_score = norm_inf(score);
  };

  auto newton_step = [&]() -> std::optional<Vector> {
    Matrix info(q, q);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = p[i] * (1.0 - p[i]);
      if (w == 0.0) continue;
      const auto row = x.row(i);
      for (std::size_t a = 0; a < q; ++a) {
        const double wa = w * row[a];
        for (std::size_t b = 0; b <= a; ++b) info(a, b) += wa * row[b];
      }
    }
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = 0; b < a; ++b) info(b, a) = info(a, b);
    try {
      return cholesky(info).solve(score);
    } catch (const NotPositiveDefinite&) {
      return std::nullopt;
    }
  };

  evaluate();
  while (model.max_abs_score > options.score_tolerance && model.iterations < options.max_iterations) {
    auto step = newton_step();
    if (!step) break;
    for (std::size_t j = 0; j < q; ++j) model.beta[j] += (*step)[j];
    ++model.iterations;
    evaluate();
  }
  // A vanishing score with coefficients still running off means saturated
  // fitted probabilities rather than a maximum.
  bool stable = false;
  if (model.max_abs_score <= options.score_tolerance) {
    auto step = newton_step();
    stable = step && norm_inf(*step) <= 1e-6 * (1.0 + norm_inf(model.beta));
  }
  model.converged = stable;
  model.max_abs_linear_predictor = norm_inf(eta);
  model.separation = !model.converged && model.max_abs_linear_predictor > options.separation_threshold;
  model.fitted = p;
  return model;
}

LogisticModel fit_logistic(const DesignMatrix& dm, const IrlsOptions& options) {
  return fit_logistic(estimation_design(dm), options);
}

Nu parse_nu(const std::string& text) {
  if (text == "observed") return Nu::observed();
  if (text == "half") return Nu::half();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0.0 && v <= 1.0)) {
    throw ConfigError("nu", "expected 'observed', 'half' or a number in [0, 1], got '" + text + "'");
  }
  return Nu::fixed(v);
}

double propensity_weight(double p_hat, int study, double nu0, double nu1) {
  const double num = p_hat * nu1 + (1.0 - p_hat) * nu0;
  return study == 0 ? num / (1.0 - p_hat) : num / p_hat;
}

PropensityWeights pooled_weights(const LogisticModel& model, Nu nu, std::optional<double> truncate_quantile) {
  const std::size_t n0 = model.n0;
  const std::size_t n = model.n0 + model.n1;
  if (model.fitted.size() != n) throw DimensionMismatch("pooled_weights: model has no fitted values");
  PropensityWeights out;
  switch (nu.kind) {
    case Nu::Kind::Observed:
      out.nu0 = static_cast<double>(model.n0) / static_cast<double>(n);
      break;
    case Nu::Kind::Half:
      out.nu0 = 0.5;
      break;
    case Nu::Kind::Explicit:
      if (!(nu.nu0 >= 0.0 && nu.nu0 <= 1.0)) throw ConfigError("nu", "ν₀ must lie in [0, 1]");
      out.nu0 = nu.nu0;
      break;
  }
  out.nu1 = 1.0 - out.nu0;
  out.separation = model.separation;
  if (model.separation) out.warnings.push_back("quasi-complete separation: fitted linear predictor exceeds 15");

  bool extreme = false;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = i < n0 ? 0 : 1;
    const double p = model.fitted[i];
    if (p < 1e-6 || p > 1.0 - 1e-6) extreme = true;
    out.p_hat[s].push_back(p);
    out.raw[s].push_back(propensity_weight(p, s, out.nu0, out.nu1));
  }
  if (extreme) out.warnings.push_back("ExtremePropensity: some p̂ outside [1e-6, 1 − 1e-6]");

  if (truncate_quantile) {
    const double q = *truncate_quantile;
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("truncate_quantile", "must lie in (0, 1]");
    Vector all = out.raw[0];
    all.insert(all.end(), out.raw[1].begin(), out.raw[1].end());
    std::sort(all.begin(), all.end());
    const double cap = quantile_sorted(all, q);
    out.truncation_cap = cap;
    for (auto& v : out.raw)
      for (double& w : v) w = std::min(w, cap);
  }
  for (int s = 0; s < 2; ++s) {
    const double total = std::accumulate(out.raw[s].begin(), out.raw[s].end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) throw ZeroWeightSum("pooled_weights: weights do not sum to a positive number");
    out.weights[s] = out.raw[s];
    for (double& w : out.weights[s]) w /= total;
    double s2 = 0.0;
    for (double w : out.weights[s]) s2 += w * w;
    out.ess[s] = 1.0 / s2;
  }
  return out;
}

SaturatedReport saturated_exact_check(const CovariateTable& table, Nu nu) {
  const auto& schema = table.schema();
  for (const auto& c : schema.covariates()) {
    if (c.kind == CovariateKind::Continuous) {
      throw SchemaError("saturated_exact_check: covariate '" + c.name + "' is continuous");
    }
  }
  std::map<std::vector<std::size_t>, std::size_t> index;
  std::vector<std::size_t> cell_of(table.rows());
  SaturatedReport rep;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::vector<std::size_t> key(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) key[c] = static_cast<std::size_t>(table.values()(r, c));
    auto [it, inserted] = index.try_emplace(key, rep.cells.size());
    if (inserted) rep.cells.push_back({key, 0, 0, 0.0});
    cell_of[r] = it->second;
    (table.study()[r] == 0 ? rep.cells[it->second].n0 : rep.cells[it->second].n1)++;
  }
  // Report cells in lexicographic level order.
  std::vector<std::size_t> remap(rep.cells.size());
  {
    std::vector<SaturatedCell> sorted;
    for (const auto& [key, idx] : index) {
      remap[idx] = sorted.size();
      sorted.push_back(rep.cells[idx]);
    }
    rep.cells = std::move(sorted);
    for (auto& c : cell_of) c = remap[c];
  }
  for (std::size_t k = 0; k < rep.cells.size(); ++k) {
    auto& cell = rep.cells[k];
    cell.p_hat = static_cast<double>(cell.n1) / static_cast<double>(cell.n0 + cell.n1);
    if (cell.n0 == 0 || cell.n1 == 0) rep.separation_cells.push_back(k);
  }

  const double n0 = static_cast<double>(table.count(0));
  const double n1 = static_cast<double>(table.count(1));
  double nu0 = 0.5;
  if (nu.kind == Nu::Kind::Observed) nu0 = n0 / (n0 + n1);
  if (nu.kind == Nu::Kind::Explicit) nu0 = nu.nu0;
  const double nu1 = 1.0 - nu0;

  for (std::size_t r = 0; r < table.rows(); ++r) {
    const int s = table.study()[r];
    const auto& cell = rep.cells[cell_of[r]];
    const bool separated = cell.n0 == 0 || cell.n1 == 0;
    rep.weights[s].push_back(separated ? 0.0 : propensity_weight(cell.p_hat, s, nu0, nu1));
  }

  const DesignMatrix dm = encode(table);
  rep.column_names = dm.column_names;
  for (int s = 0; s < 2; ++s) {
    const double total = std::accumulate(rep.weights[s].begin(), rep.weights[s].end(), 0.0);
    if (total > 0.0)
      for (double& w : rep.weights[s]) w /= total;
    const Matrix& x = s == 0 ? dm.x0 : dm.x1;
    rep.weighted_means[s] = transpose_times(x, rep.weights[s]);
  }
  for (std::size_t c = 0; c < dm.cols(); ++c) {
    rep.max_abs_gap = std::max(rep.max_abs_gap, std::abs(rep.weighted_means[0][c] - rep.weighted_means[1][c]));
  }
  return rep;
}

}  // namespace exactmatch
