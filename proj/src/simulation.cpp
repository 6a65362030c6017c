#include "exactmatch/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <type_traits>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>
#include <omp.h>

#include "exactmatch/balance.hpp"
#include "exactmatch/errors.hpp"
#include "exactmatch/exact_match.hpp"
#include "exactmatch/propensity.hpp"

namespace exactmatch {

const char* to_string(ResponseScale scale) {
  return scale == ResponseScale::LatentContinuous ? "latent-continuous" : "post-categorization";
}

ResponseScale parse_response_scale(const std::string& text) {
  if (text == "latent-continuous") return ResponseScale::LatentContinuous;
  if (text == "post-categorization") return ResponseScale::PostCategorization;
  throw ConfigError("response.scale", "expected 'latent-continuous' or 'post-categorization', got '" + text + "'");
}

const char* to_string(Method m) {
  switch (m) {
    case Method::Observed:
      return "observed";
    case Method::Unconstrained:
      return "unconstrained";
    case Method::Constrained:
      return "constrained";
    case Method::Propensity:
      return "propensity";
  }
  return "?";
}

std::size_t SimulationConfig::num_variables() const {
  std::size_t p = 0;
  for (std::size_t b : block_sizes) p += b;
  return p;
}

Matrix SimulationConfig::sigma() const {
  const std::size_t p = num_variables();
  Matrix s(p, p);
  std::size_t start = 0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    for (std::size_t i = start; i < start + block_sizes[b]; ++i)
      for (std::size_t j = start; j < start + block_sizes[b]; ++j) s(i, j) = rho.at(b);
    start += block_sizes[b];
  }
  for (std::size_t i = 0; i < p; ++i) s(i, i) = 1.0;
  return s;
}

Vector SimulationConfig::scores_for(std::size_t v, std::size_t levels) const {
  auto it = level_scores.find(v);
  if (it != level_scores.end()) return it->second;
  Vector s(levels);
  for (std::size_t k = 0; k < levels; ++k) s[k] = static_cast<double>(k) / static_cast<double>(levels - 1);
  return s;
}

namespace {

std::string var_name(std::size_t v) { return "X" + std::to_string(v + 1); }

const Categorization* find_categorization(const SimulationConfig& cfg, std::size_t v) {
  for (const auto& c : cfg.categorizations)
    if (c.variable == v) return &c;
  return nullptr;
}

}  // namespace

void SimulationConfig::validate() const {
  if (n_obs[0] < 2 || n_obs[1] < 2) throw ConfigError("n_obs", "each study needs at least 2 observations");
  if (block_sizes.empty()) throw ConfigError("block_sizes", "at least one block is required");
  for (std::size_t b : block_sizes)
    if (b == 0) throw ConfigError("block_sizes", "blocks must be non-empty");
  if (rho.size() != block_sizes.size()) throw ConfigError("rho", "needs one correlation per block");
  for (double r : rho)
    if (!(std::abs(r) < 1.0)) throw ConfigError("rho", "correlations must satisfy |rho| < 1");
  try {
    cholesky(sigma());
  } catch (const NotPositiveDefinite&) {
    throw ConfigError("rho", "implied correlation matrix is not positive definite");
  }
  const std::size_t p = num_variables();
  if (shift.size() != p) throw ConfigError("shift", "needs one entry per variable (" + std::to_string(p) + ")");
  for (double s : shift)
    if (!std::isfinite(s)) throw ConfigError("shift", "entries must be finite");
  std::set<std::size_t> seen;
  for (const auto& c : categorizations) {
    const std::string field = "thresholds." + var_name(c.variable);
    if (c.variable >= p) throw ConfigError(field, "variable out of range");
    if (!seen.insert(c.variable).second) throw ConfigError(field, "variable categorized twice");
    if (c.probabilities.empty()) throw ConfigError(field, "needs at least one threshold");
    for (std::size_t k = 0; k < c.probabilities.size(); ++k) {
      const double q = c.probabilities[k];
      if (!(q > 0.0 && q < 1.0)) throw ConfigError(field, "threshold probabilities must lie in (0, 1)");
      if (k > 0 && !(q > c.probabilities[k - 1])) throw ConfigError(field, "thresholds must be strictly increasing");
    }
  }
  for (const auto& t : response) {
    if (t.variable >= p) throw ConfigError("response.coefficients." + var_name(t.variable), "variable out of range");
    if (!std::isfinite(t.coefficient)) {
      throw ConfigError("response.coefficients." + var_name(t.variable), "must be finite");
    }
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("response.noise_sd", "must be finite and ≥ 0");
  for (const auto& [v, scores] : level_scores) {
    const std::string field = "level_scores." + var_name(v);
    const Categorization* c = find_categorization(*this, v);
    if (!c) throw ConfigError(field, "variable is not categorized");
    if (scores.size() != c->probabilities.size() + 1) throw ConfigError(field, "needs one score per level");
  }
  if (replications == 0) throw ConfigError("replications", "must be at least 1");
}

namespace {

using nlohmann::json;

std::size_t parse_var(const std::string& field, const std::string& name, std::size_t p) {
  std::size_t idx = 0;
  if (name.size() >= 2 && name[0] == 'X') {
    try {
      std::size_t used = 0;
      idx = std::stoul(name.substr(1), &used);
      if (used != name.size() - 1) idx = 0;
    } catch (const std::exception&) {
      idx = 0;
    }
  }
  if (idx == 0 || idx > p) throw ConfigError(field + "." + name, "unknown variable name");
  return idx - 1;
}

template <typename T>
T get_as(const json& j, const std::string& field) {
  if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(field, "must be a non-negative integer");
  }
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

}  // namespace

SimulationConfig parse_simulation_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("(root)", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("(root)", "must be a JSON object");
  static const std::set<std::string> known{"n_obs",     "block_sizes",  "rho",          "shift",
                                           "thresholds", "response",    "level_scores", "replications",
                                           "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(key, "unknown field");
  }
  SimulationConfig cfg;
  if (j.contains("n_obs")) {
    const auto& v = j["n_obs"];
    if (v.is_array()) {
      auto a = get_as<std::vector<std::size_t>>(v, "n_obs");
      if (a.size() != 2) throw ConfigError("n_obs", "expected a number or a pair");
      cfg.n_obs = {a[0], a[1]};
    } else {
      const auto n = get_as<std::size_t>(v, "n_obs");
      cfg.n_obs = {n, n};
    }
  }
  if (j.contains("block_sizes")) cfg.block_sizes = get_as<std::vector<std::size_t>>(j["block_sizes"], "block_sizes");
  if (j.contains("rho")) cfg.rho = get_as<Vector>(j["rho"], "rho");
  const std::size_t p = cfg.num_variables();
  if (j.contains("shift")) {
    cfg.shift = get_as<Vector>(j["shift"], "shift");
  } else if (cfg.shift.size() != p) {
    throw ConfigError("shift", "required when the number of variables differs from 15");
  }
  if (j.contains("thresholds")) {
    if (!j["thresholds"].is_object()) throw ConfigError("thresholds", "must be an object keyed by variable");
    cfg.categorizations.clear();
    for (const auto& [name, probs] : j["thresholds"].items()) {
      cfg.categorizations.push_back({parse_var("thresholds", name, p), get_as<Vector>(probs, "thresholds." + name)});
    }
    std::sort(cfg.categorizations.begin(), cfg.categorizations.end(),
              [](const auto& a, const auto& b) { return a.variable < b.variable; });
  }
  if (j.contains("response")) {
    const auto& r = j["response"];
    if (!r.is_object()) throw ConfigError("response", "must be an object");
    for (const auto& [key, value] : r.items()) {
      if (key != "coefficients" && key != "noise_sd" && key != "scale") throw ConfigError("response." + key, "unknown field");
    }
    if (r.contains("coefficients")) {
      if (!r["coefficients"].is_object()) throw ConfigError("response.coefficients", "must be an object");
      cfg.response.clear();
      for (const auto& [name, coef] : r["coefficients"].items()) {
        cfg.response.push_back(
            {parse_var("response.coefficients", name, p), get_as<double>(coef, "response.coefficients." + name)});
      }
      std::sort(cfg.response.begin(), cfg.response.end(),
                [](const auto& a, const auto& b) { return a.variable < b.variable; });
    }
    if (r.contains("noise_sd")) cfg.noise_sd = get_as<double>(r["noise_sd"], "response.noise_sd");
    if (r.contains("scale")) cfg.scale = parse_response_scale(get_as<std::string>(r["scale"], "response.scale"));
  }
  if (j.contains("level_scores")) {
    if (!j["level_scores"].is_object()) throw ConfigError("level_scores", "must be an object keyed by variable");
    for (const auto& [name, scores] : j["level_scores"].items()) {
      cfg.level_scores[parse_var("level_scores", name, p)] = get_as<Vector>(scores, "level_scores." + name);
    }
  }
  if (j.contains("replications")) cfg.replications = get_as<std::size_t>(j["replications"], "replications");
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j["seed"], "seed");
  cfg.validate();
  return cfg;
}

std::string simulation_config_json(const SimulationConfig& cfg) {
  json j;
  j["n_obs"] = cfg.n_obs;
  j["block_sizes"] = cfg.block_sizes;
  j["rho"] = cfg.rho;
  j["shift"] = cfg.shift;
  json th = json::object();
  for (const auto& c : cfg.categorizations) th[var_name(c.variable)] = c.probabilities;
  j["thresholds"] = th;
  json coefs = json::object();
  for (const auto& t : cfg.response) coefs[var_name(t.variable)] = t.coefficient;
  j["response"] = {{"coefficients", coefs}, {"noise_sd", cfg.noise_sd}, {"scale", to_string(cfg.scale)}};
  json scores = json::object();
  for (const auto& c : cfg.categorizations) {
    if (std::any_of(cfg.response.begin(), cfg.response.end(), [&](const auto& t) { return t.variable == c.variable; })) {
      scores[var_name(c.variable)] = cfg.scores_for(c.variable, c.probabilities.size() + 1);
    }
  }
  j["level_scores"] = scores;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

namespace {

CovariateSchema simulation_schema(const SimulationConfig& cfg) {
  std::vector<Covariate> covs;
  for (std::size_t v = 0; v < cfg.num_variables(); ++v) {
    Covariate c;
    c.name = var_name(v);
    if (const Categorization* cat = find_categorization(cfg, v)) {
      const std::size_t levels = cat->probabilities.size() + 1;
      if (levels == 2) {
        c.kind = CovariateKind::Binary;
      } else {
        c.kind = CovariateKind::Categorical;
        for (std::size_t k = 0; k < levels; ++k) c.levels.push_back(std::string(1, static_cast<char>('A' + k)));
      }
    }
    covs.push_back(std::move(c));
  }
  return CovariateSchema(std::move(covs));
}

}  // namespace

SimulatedPair simulate_pair(const SimulationConfig& cfg, std::size_t replication) {
  const std::size_t p = cfg.num_variables();
  const CholeskyFactor chol = cholesky(cfg.sigma());
  const Matrix& l = chol.lower();

  const boost::math::normal_distribution<double> normal;
  std::vector<std::optional<Vector>> cuts(p);
  std::vector<Vector> scores(p);
  for (const auto& c : cfg.categorizations) {
    Vector t;
    for (double q : c.probabilities) t.push_back(boost::math::quantile(normal, q));
    cuts[c.variable] = std::move(t);
    scores[c.variable] = cfg.scores_for(c.variable, c.probabilities.size() + 1);
  }

  const std::uint64_t seed = cfg.seed;
  const std::uint64_t rep = replication;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t n = cfg.n_obs[0] + cfg.n_obs[1];
  std::vector<int> study(n);
  Matrix values(n, p);
  Vector y_latent(n);
  Vector y_cat(n);
  Vector z(p);
  Vector x(p);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = i < cfg.n_obs[0] ? 0 : 1;
    study[i] = s;
    for (double& v : z) v = gauss(rng);
    for (std::size_t a = 0; a < p; ++a) {
      double v = s == 1 ? cfg.shift[a] : 0.0;
      for (std::size_t b = 0; b <= a; ++b) v += l(a, b) * z[b];
      x[a] = v;
    }
    const double noise = cfg.noise_sd * gauss(rng);
    for (std::size_t a = 0; a < p; ++a) {
      if (cuts[a]) {
        const auto& t = *cuts[a];
        values(i, a) = static_cast<double>(std::count_if(t.begin(), t.end(), [&](double c) { return x[a] > c; }));
      } else {
        values(i, a) = x[a];
      }
    }
    double yl = noise;
    double yc = noise;
    for (const auto& term : cfg.response) {
      const std::size_t a = term.variable;
      yl += term.coefficient * x[a];
      yc += term.coefficient * (cuts[a] ? scores[a][static_cast<std::size_t>(values(i, a))] : x[a]);
    }
    y_latent[i] = yl;
    y_cat[i] = yc;
  }
  Vector response = cfg.scale == ResponseScale::LatentContinuous ? y_latent : y_cat;
  return SimulatedPair{CovariateTable(simulation_schema(cfg), std::move(study), std::move(values), std::move(response),
                                      {"A", "B"}),
                       std::move(y_latent), std::move(y_cat)};
}

CovariateTable generate_pair(const SimulationConfig& cfg, std::size_t replication) {
  return simulate_pair(cfg, replication).table;
}

namespace {

constexpr double kStandardizedTotal = 100.0;

void fill_outcome(MethodOutcome& out, const std::array<Vector, 2>& w, const std::array<Vector, 2>& y_latent,
                  const std::array<Vector, 2>& y_cat) {
  out.solved = true;
  out.max_weight = 0.0;
  for (int s = 0; s < 2; ++s) {
    out.ess[s] = ess(w[s]);
    const Vector scaled = rescale(w[s], kStandardizedTotal);
    out.max_weight = std::max(out.max_weight, *std::max_element(scaled.begin(), scaled.end()));
  }
  out.ydiff_latent = weighted_mean(y_latent[0], w[0]) - weighted_mean(y_latent[1], w[1]);
  out.ydiff_categorized = weighted_mean(y_cat[0], w[0]) - weighted_mean(y_cat[1], w[1]);
}

}  // namespace

ReplicationRecord run_replication(const SimulationConfig& cfg, std::size_t replication) {
  const SimulatedPair pair = simulate_pair(cfg, replication);
  const DesignMatrix dm = encode(pair.table);
  std::array<Vector, 2> y_latent;
  std::array<Vector, 2> y_cat;
  for (std::size_t r : dm.rows0) {
    y_latent[0].push_back(pair.y_latent[r]);
    y_cat[0].push_back(pair.y_categorized[r]);
  }
  for (std::size_t r : dm.rows1) {
    y_latent[1].push_back(pair.y_latent[r]);
    y_cat[1].push_back(pair.y_categorized[r]);
  }

  ReplicationRecord rec;
  rec.index = replication;
  for (Method m : kMethods) {
    MethodOutcome& out = rec.methods[static_cast<std::size_t>(m)];
    try {
      std::array<Vector, 2> w;
      switch (m) {
        case Method::Observed:
          w = {Vector(dm.n0(), 1.0 / static_cast<double>(dm.n0())), Vector(dm.n1(), 1.0 / static_cast<double>(dm.n1()))};
          break;
        case Method::Unconstrained:
        case Method::Constrained: {
          MatchSpec spec;
          spec.mode = m == Method::Constrained ? MatchMode::Constrained : MatchMode::Unconstrained;
          WeightSolution sol = match(dm, spec);
          if (sol.status != MatchStatus::Matched) {
            out.failure = "NoSolution";
            continue;
          }
          w = std::move(sol.weights);
          break;
        }
        case Method::Propensity: {
          const LogisticModel model = fit_logistic(dm);
          w = pooled_weights(model, Nu::observed()).weights;
          break;
        }
      }
      fill_outcome(out, w, y_latent, y_cat);
    } catch (const Error& e) {
      out = MethodOutcome{};
      out.failure = e.what();
    }
  }
  return rec;
}

SimulationSummary summarize(const SimulationConfig& cfg, const std::vector<ReplicationRecord>& records) {
  SimulationSummary summary;
  summary.config = cfg;
  for (Method m : kMethods) {
    const auto k = static_cast<std::size_t>(m);
    std::array<std::vector<std::optional<double>>, 2> ess;
    std::vector<std::optional<double>> maxw;
    std::vector<std::optional<double>> yl;
    std::vector<std::optional<double>> yc;
    MethodSummary& ms = summary.methods[k];
    ms.method = m;
    for (const auto& rec : records) {
      const MethodOutcome& o = rec.methods[k];
      if (!o.solved) {
        ++ms.no_solution;
        ess[0].emplace_back();
        ess[1].emplace_back();
        maxw.emplace_back();
        yl.emplace_back();
        yc.emplace_back();
        continue;
      }
      ess[0].emplace_back(o.ess[0]);
      ess[1].emplace_back(o.ess[1]);
      maxw.emplace_back(o.max_weight);
      yl.emplace_back(o.ydiff_latent);
      yc.emplace_back(o.ydiff_categorized);
    }
    ms.ess = {difference_summary(ess[0]), difference_summary(ess[1])};
    ms.max_weight = difference_summary(maxw);
    ms.ydiff_latent = difference_summary(yl);
    ms.ydiff_categorized = difference_summary(yc);
  }
  return summary;
}

SimulationResult run_study(const SimulationConfig& cfg, int threads, const ProgressCallback& progress) {
  cfg.validate();
  const std::size_t total = cfg.replications;
  std::vector<ReplicationRecord> records(total);
  std::atomic<std::size_t> done{0};
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  const auto total_i = static_cast<std::ptrdiff_t>(total);

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (std::ptrdiff_t r = 0; r < total_i; ++r) {
    records[static_cast<std::size_t>(r)] = run_replication(cfg, static_cast<std::size_t>(r));
    const std::size_t finished = ++done;
    if (progress && (finished % 100 == 0 || finished == total)) {
#pragma omp critical(exactmatch_progress)
      progress(finished, total);
    }
  }
  SimulationResult result{summarize(cfg, records), std::move(records)};
  return result;
}

SimulationResult run_study_serial(const SimulationConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  std::vector<ReplicationRecord> records;
  records.reserve(cfg.replications);
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    records.push_back(run_replication(cfg, r));
    if (progress && ((r + 1) % 100 == 0 || r + 1 == cfg.replications)) progress(r + 1, cfg.replications);
  }
  SimulationResult result{summarize(cfg, records), std::move(records)};
  return result;
}

}  // namespace exactmatch
