#include "exactmatch/report.hpp"

#include <charconv>
#include <cmath>

namespace exactmatch {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

json to_json(const QpTolerances& tol) {
  return {{"dependence", tol.dependence},
          {"violation", tol.violation},
          {"iteration_factor", tol.iteration_factor},
          {"balance_check", 1e-8},
          {"weight_clamp", 1e-10}};
}

json to_json(const WeightSolution& sol, const DesignMatrix& dm) {
  json j;
  j["status"] = to_string(sol.status);
  j["tolerances"] = to_json(sol.tolerances);
  j["warnings"] = sol.warnings;
  json cols = json::array();
  for (std::size_t c : sol.columns) cols.push_back(dm.column_names[c]);
  j["balanced_columns"] = cols;
  if (sol.status != MatchStatus::Matched) return j;
  j["objective"] = sol.objective;
  j["iterations"] = sol.iterations;
  j["min_raw_weight"] = sol.min_raw_weight;
  j["sums"] = sol.sums;
  j["ess"] = {{"study0", sol.ess[0]}, {"study1", sol.ess[1]}, {"combined", sol.ess_combined}};
  json means = json::array();
  for (std::size_t c = 0; c < dm.cols(); ++c) {
    means.push_back({{"column", dm.column_names[c]},
                     {"study0", sol.weighted_means[0][c]},
                     {"study1", sol.weighted_means[1][c]}});
  }
  j["weighted_means"] = means;
  json w = json::array();
  for (int s = 0; s < 2; ++s) {
    const auto& rows = s == 0 ? dm.rows0 : dm.rows1;
    for (std::size_t i = 0; i < rows.size(); ++i) w.push_back({{"row", rows[i] + 1}, {"study", s}, {"weight", sol.weights[s][i]}});
  }
  j["weights"] = w;
  return j;
}

json to_json(const BalanceReport& report) {
  json j;
  j["n"] = report.n;
  j["study_labels"] = report.study_labels;
  j["variance_rule"] = report.variance_rule;
  json methods = json::array();
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    const auto& ms = report.methods[m];
    json mj = {{"name", ms.name}, {"exact", ms.exact}, {"solved", ms.solved}};
    if (ms.solved) {
      mj["ess"] = ms.ess;
      mj["max_abs_smd"] = report.max_smd(m);
    }
    methods.push_back(mj);
  }
  j["methods"] = methods;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json rj = {{"column", row.column},
               {"observed", row.observed},
               {"smd_before", optional_number(row.smd_before)},
               {"outside_box", row.outside_box}};
    json per = json::object();
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      const auto& col = row.methods[m];
      if (!col) {
        per[report.methods[m].name] = nullptr;
        continue;
      }
      per[report.methods[m].name] = {{"mean", col->mean}, {"smd", optional_number(col->smd)}};
    }
    rj["methods"] = per;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j;
}

json to_json(const LogisticModel& model) {
  json coefs = json::array();
  for (std::size_t k = 0; k < model.beta.size(); ++k) coefs.push_back({{"name", model.names[k]}, {"beta", model.beta[k]}});
  return {{"coefficients", coefs},
          {"converged", model.converged},
          {"iterations", model.iterations},
          {"max_abs_score", model.max_abs_score},
          {"max_abs_linear_predictor", model.max_abs_linear_predictor},
          {"separation", model.separation}};
}

json to_json(const PropensityWeights& weights) {
  json j = {{"nu0", weights.nu0},
            {"nu1", weights.nu1},
            {"separation", weights.separation},
            {"ess", weights.ess},
            {"warnings", weights.warnings},
            {"truncation_cap", weights.truncation_cap ? json(*weights.truncation_cap) : json(nullptr)}};
  json patients = json::array();
  for (int s = 0; s < 2; ++s) {
    for (std::size_t i = 0; i < weights.weights[s].size(); ++i) {
      patients.push_back({{"study", s},
                          {"index", i},
                          {"p_hat", weights.p_hat[s][i]},
                          {"raw_weight", number_or_null(weights.raw[s][i])},
                          {"weight", weights.weights[s][i]}});
    }
  }
  j["patients"] = patients;
  return j;
}

json to_json(const ResponseEstimate& est) {
  return {{"mean", est.mean},
          {"s2", est.s2},
          {"var", est.var},
          {"ess", est.ess},
          {"difference", est.difference},
          {"se", est.se},
          {"ci_level", est.ci_level},
          {"ci", {est.ci_lower, est.ci_upper}}};
}

json to_json(const DistributionSummary& s) {
  return {{"count", s.count},           {"na", s.na},
          {"min", number_or_null(s.min)}, {"q1", number_or_null(s.q1)},
          {"median", number_or_null(s.median)}, {"mean", number_or_null(s.mean)},
          {"q3", number_or_null(s.q3)},   {"max", number_or_null(s.max)},
          {"sd", number_or_null(s.sd)}};
}

json to_json(const SimulationSummary& summary) {
  json j;
  j["config"] = json::parse(simulation_config_json(summary.config));
  j["rng"] = summary.rng;
  json methods = json::object();
  for (const auto& ms : summary.methods) {
    methods[to_string(ms.method)] = {{"no_solution", ms.no_solution},
                                     {"ess", {{"A", to_json(ms.ess[0])}, {"B", to_json(ms.ess[1])}}},
                                     {"max_weight", to_json(ms.max_weight)},
                                     {"ydiff_latent", to_json(ms.ydiff_latent)},
                                     {"ydiff_categorized", to_json(ms.ydiff_categorized)}};
  }
  j["methods"] = methods;
  return j;
}

void write_weights_csv(std::ostream& out, const DesignMatrix& dm, const std::array<Vector, 2>& weights,
                       const std::array<std::string, 2>& study_labels) {
  out << "row,study,weight,weight_sum100\n";
  for (int s = 0; s < 2; ++s) {
    const auto& rows = s == 0 ? dm.rows0 : dm.rows1;
    const Vector scaled = rescale(weights[s], 100.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << rows[i] + 1 << ',' << csv_field(study_labels[s]) << ',' << format_number(weights[s][i]) << ','
          << format_number(scaled[i]) << '\n';
    }
  }
}

void write_balance_csv(std::ostream& out, const BalanceReport& report) {
  out << "column,mean_" << csv_field(report.study_labels[0]) << ",mean_" << csv_field(report.study_labels[1])
      << ",smd_before";
  for (const auto& m : report.methods) {
    out << ',' << csv_field(m.name + "_mean0") << ',' << csv_field(m.name + "_mean1") << ','
        << csv_field(m.name + "_smd");
  }
  out << ",outside_box\n";
  for (const auto& row : report.rows) {
    out << csv_field(row.column) << ',' << format_number(row.observed[0]) << ',' << format_number(row.observed[1]) << ','
        << (row.smd_before ? format_number(*row.smd_before) : "NA");
    for (const auto& col : row.methods) {
      if (!col) {
        out << ",NA,NA,NA";
        continue;
      }
      out << ',' << format_number(col->mean[0]) << ',' << format_number(col->mean[1]) << ','
          << (col->smd ? format_number(*col->smd) : "NA");
    }
    out << ',' << (row.outside_box ? "true" : "false") << '\n';
  }
}

namespace {

void write_summary_row(std::ostream& out, const std::string& prefix, const DistributionSummary& s) {
  out << prefix << ',' << format_number(s.min) << ',' << format_number(s.q1) << ',' << format_number(s.median) << ','
      << format_number(s.mean) << ',' << format_number(s.q3) << ',' << format_number(s.max) << ','
      << format_number(s.sd) << ',' << s.na << '\n';
}

constexpr const char* kSummaryHeader = "min,q1,median,mean,q3,max,sd,na\n";

}  // namespace

void write_ess_csv(std::ostream& out, const SimulationSummary& summary) {
  out << "method,study," << kSummaryHeader;
  for (const auto& ms : summary.methods) {
    write_summary_row(out, std::string(to_string(ms.method)) + ",A", ms.ess[0]);
    write_summary_row(out, std::string(to_string(ms.method)) + ",B", ms.ess[1]);
  }
}

void write_maxweights_csv(std::ostream& out, const SimulationSummary& summary) {
  out << "method," << kSummaryHeader;
  for (const auto& ms : summary.methods) write_summary_row(out, to_string(ms.method), ms.max_weight);
}

void write_ydiff_csv(std::ostream& out, const SimulationSummary& summary) {
  out << "scale,method," << kSummaryHeader;
  for (const auto& ms : summary.methods) {
    write_summary_row(out, std::string("latent-continuous,") + to_string(ms.method), ms.ydiff_latent);
  }
  for (const auto& ms : summary.methods) {
    write_summary_row(out, std::string("post-categorization,") + to_string(ms.method), ms.ydiff_categorized);
  }
}

void write_replications_csv(std::ostream& out, const std::vector<ReplicationRecord>& records) {
  out << "replication,method,solved,ess_A,ess_B,max_weight,ydiff_latent,ydiff_categorized\n";
  for (const auto& rec : records) {
    for (Method m : kMethods) {
      const auto& o = rec.methods[static_cast<std::size_t>(m)];
      out << rec.index << ',' << to_string(m) << ',' << (o.solved ? 1 : 0);
      if (o.solved) {
        out << ',' << format_number(o.ess[0]) << ',' << format_number(o.ess[1]) << ',' << format_number(o.max_weight)
            << ',' << format_number(o.ydiff_latent) << ',' << format_number(o.ydiff_categorized) << '\n';
      } else {
        out << ",NA,NA,NA,NA,NA\n";
      }
    }
  }
}

}  // namespace exactmatch
