#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exactmatch/data.hpp"
#include "exactmatch/response.hpp"

namespace exactmatch {

enum class ResponseScale { LatentContinuous, PostCategorization };

const char* to_string(ResponseScale scale);
ResponseScale parse_response_scale(const std::string& text);

struct Categorization {
  std::size_t variable = 0;  // 0-based
  /// Normal probabilities; cut points are their standard-normal quantiles.
  Vector probabilities;
};

struct ResponseTerm {
  std::size_t variable = 0;
  double coefficient = 0.0;
};

struct SimulationConfig {
  std::array<std::size_t, 2> n_obs{300, 300};
  std::vector<std::size_t> block_sizes{5, 5, 5};
  Vector rho{0.3, 0.5, 0.7};
  /// Mean of study B per variable; study A has mean 0.
  Vector shift{1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1};
  std::vector<Categorization> categorizations{
      {0, {0.238}},         {1, {0.312}}, {2, {0.12, 0.335, 0.68}}, {5, {0.439}},
      {6, {0.581}},         {7, {0.23, 0.56}}, {10, {0.607}},       {11, {0.712}},
      {12, {0.842}},        {13, {0.18, 0.3, 0.56, 0.72}}};
  std::vector<ResponseTerm> response{{0, 0.3}, {2, 0.2}, {7, 0.3}, {8, 0.1}, {10, 0.2}, {14, 0.1}};
  double noise_sd = 1.0;
  ResponseScale scale = ResponseScale::LatentContinuous;
  /// Scores substituted for a categorized variable's levels on the
  /// post-categorization scale. Missing entries use k/(L−1).
  std::map<std::size_t, Vector> level_scores;
  std::size_t replications = 1000;
  std::uint64_t seed = 0;

  std::size_t num_variables() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Level scores actually used for variable v with `levels` levels.
  Vector scores_for(std::size_t v, std::size_t levels) const;
  /// Block compound-symmetric correlation matrix.
  Matrix sigma() const;
};

/// Reads the JSON form; absent keys keep their defaults.
SimulationConfig parse_simulation_config(const std::string& json_text);
std::string simulation_config_json(const SimulationConfig& cfg);

struct SimulatedPair {
  CovariateTable table;  // response column per cfg.scale
  Vector y_latent;
  Vector y_categorized;
};

/// Replication r depends only on (cfg.seed, r).
SimulatedPair simulate_pair(const SimulationConfig& cfg, std::size_t replication);
CovariateTable generate_pair(const SimulationConfig& cfg, std::size_t replication);

enum class Method { Observed, Unconstrained, Constrained, Propensity };
inline constexpr std::array<Method, 4> kMethods{Method::Observed, Method::Unconstrained, Method::Constrained,
                                                 Method::Propensity};
const char* to_string(Method m);

struct MethodOutcome {
  bool solved = false;
  std::array<double, 2> ess{0.0, 0.0};
  /// Max over both studies of the weights scaled to sum 100 per study.
  double max_weight = 0.0;
  /// Weighted mean response of study A minus study B.
  double ydiff_latent = 0.0;
  double ydiff_categorized = 0.0;
  std::string failure;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::array<MethodOutcome, 4> methods;
};

ReplicationRecord run_replication(const SimulationConfig& cfg, std::size_t replication);

struct MethodSummary {
  Method method = Method::Observed;
  std::size_t no_solution = 0;
  std::array<DistributionSummary, 2> ess;
  DistributionSummary max_weight;
  DistributionSummary ydiff_latent;
  DistributionSummary ydiff_categorized;
};

struct SimulationSummary {
  SimulationConfig config;
  std::string rng = "std::mt19937_64 seeded by std::seed_seq(seed, replication); std::normal_distribution";
  std::array<MethodSummary, 4> methods;
};

SimulationSummary summarize(const SimulationConfig& cfg, const std::vector<ReplicationRecord>& records);

struct SimulationResult {
  SimulationSummary summary;
  std::vector<ReplicationRecord> records;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// OpenMP-parallel over replications. `threads` = 0 keeps the runtime default.
/// Output is identical for every thread count.
SimulationResult run_study(const SimulationConfig& cfg, int threads = 0, const ProgressCallback& progress = {});

/// Single-threaded reference implementation.
SimulationResult run_study_serial(const SimulationConfig& cfg, const ProgressCallback& progress = {});

}  // namespace exactmatch
