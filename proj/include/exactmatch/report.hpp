#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "exactmatch/balance.hpp"
#include "exactmatch/exact_match.hpp"
#include "exactmatch/propensity.hpp"
#include "exactmatch/response.hpp"
#include "exactmatch/simulation.hpp"

namespace exactmatch {

nlohmann::json to_json(const WeightSolution& sol, const DesignMatrix& dm);
nlohmann::json to_json(const BalanceReport& report);
nlohmann::json to_json(const LogisticModel& model);
nlohmann::json to_json(const PropensityWeights& weights);
nlohmann::json to_json(const ResponseEstimate& est);
nlohmann::json to_json(const DistributionSummary& s);
nlohmann::json to_json(const SimulationSummary& summary);
nlohmann::json to_json(const QpTolerances& tol);

/// row,study,weight with row numbered from 1 over the data rows of the input.
void write_weights_csv(std::ostream& out, const DesignMatrix& dm, const std::array<Vector, 2>& weights,
                       const std::array<std::string, 2>& study_labels);

/// One row per encoded column; NA for undefined SMDs.
void write_balance_csv(std::ostream& out, const BalanceReport& report);

/// statistic,method,study,value blocks in the shape of the summary tables.
void write_ess_csv(std::ostream& out, const SimulationSummary& summary);
void write_maxweights_csv(std::ostream& out, const SimulationSummary& summary);
void write_ydiff_csv(std::ostream& out, const SimulationSummary& summary);
void write_replications_csv(std::ostream& out, const std::vector<ReplicationRecord>& records);

/// Shortest round-trip decimal form, "NA" for NaN.
std::string format_number(double v);

}  // namespace exactmatch
