#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "exactmatch/balance.hpp"
#include "exactmatch/data.hpp"
#include "exactmatch/errors.hpp"
#include "exactmatch/exact_match.hpp"
#include "exactmatch/lp.hpp"
#include "exactmatch/propensity.hpp"
#include "exactmatch/report.hpp"
#include "exactmatch/response.hpp"
#include "exactmatch/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace exactmatch;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNoSolution = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)), started_(utc_now()) {}

  void input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  json& config() { return config_; }

  void write(const fs::path& dir) const {
    json j = {{"tool", "exactmatch"},
              {"version", EXACTMATCH_VERSION},
              {"subcommand", subcommand_},
              {"config", config_},
              {"inputs", inputs_},
              {"started_at", started_},
              {"finished_at", utc_now()}};
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << '\n';
  }

 private:
  std::string subcommand_;
  std::string started_;
  json config_ = json::object();
  json inputs_ = json::array();
};

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

struct DataOptions {
  std::string csv;
  std::string schema;
  std::string study_col;
  std::string study0;
  std::string study1;
  std::string response_col;
  std::vector<std::string> continuous;
  std::vector<std::string> binary;
  std::vector<std::string> categorical;
  std::vector<std::string> ignore;
};

void add_data_options(CLI::App* app, DataOptions& o) {
  app->add_option("csv", o.csv, "Two-study CSV with a header row")->required()->check(CLI::ExistingFile);
  app->add_option("--schema", o.schema, "JSON schema sidecar")->check(CLI::ExistingFile);
  app->add_option("--study-col", o.study_col, "Column holding the study label");
  app->add_option("--study0", o.study0, "Label of study 0");
  app->add_option("--study1", o.study1, "Label of study 1");
  app->add_option("--response-col", o.response_col, "Response column");
  app->add_option("--continuous", o.continuous, "Continuous covariate")->take_all();
  app->add_option("--binary", o.binary, "Binary covariate coded 0/1")->take_all();
  app->add_option("--categorical", o.categorical, "Categorical covariate as NAME=L1,L2,...")->take_all();
  app->add_option("--ignore-column", o.ignore, "CSV column to leave out of the analysis")->take_all();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

struct LoadedData {
  SchemaDirectives directives;
  CovariateTable table;
  DesignMatrix dm;
};

SchemaDirectives resolve_directives(const DataOptions& o) {
  SchemaDirectives d;
  const bool flag_covariates = !o.continuous.empty() || !o.binary.empty() || !o.categorical.empty();
  if (!o.schema.empty()) {
    if (flag_covariates) throw UsageError("declare covariates either in --schema or with flags, not both");
    d = read_schema_json(o.schema);
  } else {
    std::vector<Covariate> covs;
    for (const auto& n : o.continuous) covs.push_back({n, CovariateKind::Continuous, {}});
    for (const auto& n : o.binary) covs.push_back({n, CovariateKind::Binary, {}});
    for (const auto& spec : o.categorical) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw SchemaError("categorical column '" + spec.substr(0, eq) + "' needs its levels as NAME=L1,L2,...");
      }
      covs.push_back({spec.substr(0, eq), CovariateKind::Categorical, split(spec.substr(eq + 1), ',')});
    }
    if (covs.empty()) throw UsageError("no covariates declared; pass --schema or --continuous/--binary/--categorical");
    d.schema = CovariateSchema(std::move(covs));
  }
  if (!o.study_col.empty()) d.study_col = o.study_col;
  if (!o.study0.empty()) d.study0 = o.study0;
  if (!o.study1.empty()) d.study1 = o.study1;
  if (!o.response_col.empty()) d.response_col = o.response_col;
  if (d.study_col.empty()) throw UsageError("the study column must be named with --study-col or in the schema");
  if (!d.study0 || !d.study1) throw UsageError("study labels must be given with --study0/--study1 or in the schema");
  return d;
}

LoadedData load(const DataOptions& o, Manifest& manifest) {
  SchemaDirectives d = resolve_directives(o);
  const auto header = read_csv_header(o.csv);
  std::set<std::string> known(o.ignore.begin(), o.ignore.end());
  known.insert(d.study_col);
  if (d.response_col) known.insert(*d.response_col);
  for (const auto& c : d.schema.covariates()) known.insert(c.name);
  for (const auto& h : header) {
    if (!known.count(h)) {
      throw SchemaError("column '" + h + "' has no schema directive; declare its kind (and levels for a factor) or pass --ignore-column");
    }
  }
  manifest.input("csv", o.csv);
  if (!o.schema.empty()) manifest.input("schema", o.schema);
  CovariateTable table = read_csv(fs::path(o.csv), d);
  DesignMatrix dm = encode(table);

  json cov = json::array();
  for (const auto& c : d.schema.covariates()) {
    cov.push_back({{"name", c.name}, {"kind", to_string(c.kind)}, {"levels", c.levels}});
  }
  manifest.config()["schema"] = {{"covariates", cov},
                                 {"study_col", d.study_col},
                                 {"study0", *d.study0},
                                 {"study1", *d.study1},
                                 {"response_col", d.response_col ? json(*d.response_col) : json(nullptr)}};
  return {std::move(d), std::move(table), std::move(dm)};
}

MatchSpec make_spec(const std::string& mode, const std::vector<std::string>& columns, double max_weight,
                    const DesignMatrix& dm) {
  MatchSpec spec;
  spec.mode = parse_match_mode(mode);
  if (!columns.empty()) {
    std::vector<std::size_t> idx;
    for (const auto& name : columns) {
      auto it = std::find(dm.column_names.begin(), dm.column_names.end(), name);
      if (it != dm.column_names.end()) {
        idx.push_back(static_cast<std::size_t>(it - dm.column_names.begin()));
        continue;
      }
      bool found = false;
      for (std::size_t c = 0; c < dm.cols(); ++c) {
        if (dm.column_names[c].rfind(name + "=", 0) == 0) {
          idx.push_back(c);
          found = true;
        }
      }
      if (!found) throw ConfigError("columns", "no encoded column named '" + name + "'");
    }
    spec.columns = idx;
  }
  if (max_weight > 0.0) spec.max_weight = max_weight;
  return spec;
}

std::array<Vector, 2> uniform_weights(const DesignMatrix& dm) {
  return {Vector(dm.n0(), 1.0 / static_cast<double>(dm.n0())), Vector(dm.n1(), 1.0 / static_cast<double>(dm.n1()))};
}

// --- match -----------------------------------------------------------------

struct MatchOptions {
  DataOptions data;
  std::string mode = "unconstrained";
  std::vector<std::string> columns;
  double max_weight = 0.0;
  double ci_level = 0.95;
  std::string out;
};

int cmd_match(const MatchOptions& o) {
  Manifest manifest("match");
  LoadedData data = load(o.data, manifest);
  const MatchSpec spec = make_spec(o.mode, o.columns, o.max_weight, data.dm);
  manifest.config()["mode"] = o.mode;
  manifest.config()["columns"] = o.columns;
  manifest.config()["max_weight"] = o.max_weight > 0.0 ? json(o.max_weight) : json(nullptr);
  manifest.config()["ci_level"] = o.ci_level;

  const WeightSolution sol = match(data.dm, spec);
  for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';

  prepare_dir(o.out);
  json result;
  result["solution"] = to_json(sol, data.dm);
  std::vector<NamedWeights> methods{{"observed", false, uniform_weights(data.dm)}};
  std::optional<std::array<Vector, 2>> w;
  if (sol.status == MatchStatus::Matched) w = sol.weights;
  methods.push_back({to_string(spec.mode), true, w});
  result["balance"] = to_json(balance_table(data.dm, methods, data.table.study_labels()));
  if (sol.status == MatchStatus::Matched) {
    auto out = open_out(fs::path(o.out) / "weights.csv");
    write_weights_csv(out, data.dm, sol.weights, data.table.study_labels());
    if (data.table.response()) result["response"] = to_json(estimate_response(data.table, data.dm, sol.weights, o.ci_level));
  }
  write_json(fs::path(o.out) / "balance.json", result);
  manifest.write(o.out);

  std::cout << "status: " << to_string(sol.status) << '\n';
  if (sol.status != MatchStatus::Matched) return kNoSolution;
  std::cout << std::setprecision(6) << "ESS: " << sol.ess[0] << " / " << sol.ess[1] << '\n';
  return kOk;
}

// --- feasible --------------------------------------------------------------

struct FeasibleOptions {
  DataOptions data;
  std::string mode = "unconstrained";
  std::string witness;
  std::string out;
};

int cmd_feasible(const FeasibleOptions& o) {
  Manifest manifest("feasible");
  LoadedData data = load(o.data, manifest);
  const MatchSpec spec = make_spec(o.mode, {}, 0.0, data.dm);
  manifest.config()["mode"] = o.mode;
  const LpResult res = is_feasible(build_lp(data.dm, spec));
  std::cout << (res.feasible ? "Feasible" : "Infeasible") << '\n';
  if (res.feasible && !o.witness.empty()) {
    const Vector& w = *res.witness;
    std::array<Vector, 2> split_w{Vector(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(data.dm.n0())),
                                  Vector(w.begin() + static_cast<std::ptrdiff_t>(data.dm.n0()), w.end())};
    auto out = open_out(o.witness);
    write_weights_csv(out, data.dm, split_w, data.table.study_labels());
  }
  if (!o.out.empty()) {
    prepare_dir(o.out);
    write_json(fs::path(o.out) / "feasibility.json",
               {{"feasible", res.feasible}, {"artificial_sum", res.artificial_sum}, {"pivots", res.pivots}});
    manifest.write(o.out);
  }
  return res.feasible ? kOk : kNoSolution;
}

// --- propensity ------------------------------------------------------------

struct PropensityOptions {
  DataOptions data;
  std::string nu = "observed";
  double truncate_quantile = 0.0;
  double ci_level = 0.95;
  std::string out;
};

int cmd_propensity(const PropensityOptions& o) {
  Manifest manifest("propensity");
  LoadedData data = load(o.data, manifest);
  const Nu nu = parse_nu(o.nu);
  std::optional<double> trunc;
  if (o.truncate_quantile > 0.0) trunc = o.truncate_quantile;
  manifest.config()["nu"] = o.nu;
  manifest.config()["truncate_quantile"] = trunc ? json(*trunc) : json(nullptr);
  manifest.config()["ci_level"] = o.ci_level;

  const LogisticModel model = fit_logistic(data.dm);
  const PropensityWeights pw = pooled_weights(model, nu, trunc);
  for (const auto& w : pw.warnings) std::cerr << "warning: " << w << '\n';

  prepare_dir(o.out);
  json result = {{"model", to_json(model)}, {"weights", to_json(pw)}};
  result["balance"] = to_json(balance_table(
      data.dm, {{"observed", false, uniform_weights(data.dm)}, {"propensity", false, pw.weights}},
      data.table.study_labels()));
  if (data.table.response()) result["response"] = to_json(estimate_response(data.table, data.dm, pw.weights, o.ci_level));
  write_json(fs::path(o.out) / "propensity.json", result);
  auto out = open_out(fs::path(o.out) / "weights.csv");
  write_weights_csv(out, data.dm, pw.weights, data.table.study_labels());
  manifest.write(o.out);
  std::cout << "converged: " << (model.converged ? "yes" : "no") << ", separation: " << (pw.separation ? "yes" : "no")
            << '\n';
  return kOk;
}

// --- diagnose --------------------------------------------------------------

struct DiagnoseOptions {
  DataOptions data;
  std::string nu = "observed";
  double truncate_quantile = 0.0;
  double ci_level = 0.95;
  std::size_t bins = 20;
  std::string out;
};

void write_plot_data(const fs::path& dir, const DesignMatrix& dm, const std::vector<NamedWeights>& methods,
                     const std::array<std::string, 2>& labels, std::size_t bins) {
  auto scatter = open_out(dir / "plot_weights.csv");
  scatter << "row,study";
  for (const auto& m : methods) scatter << ',' << m.name;
  scatter << '\n';
  std::vector<std::optional<std::array<Vector, 2>>> scaled;
  for (const auto& m : methods) {
    if (!m.weights) {
      scaled.emplace_back();
      continue;
    }
    scaled.push_back(std::array<Vector, 2>{rescale((*m.weights)[0], 100.0), rescale((*m.weights)[1], 100.0)});
  }
  for (int s = 0; s < 2; ++s) {
    const auto& rows = s == 0 ? dm.rows0 : dm.rows1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scatter << rows[i] + 1 << ',' << labels[s];
      for (const auto& w : scaled) scatter << ',' << (w ? format_number((*w)[s][i]) : "NA");
      scatter << '\n';
    }
  }

  auto hist = open_out(dir / "plot_histogram.csv");
  hist << "method,study,bin_lower,bin_upper,count\n";
  for (std::size_t k = 0; k < methods.size(); ++k) {
    if (!scaled[k]) continue;
    for (int s = 0; s < 2; ++s) {
      const Vector& w = (*scaled[k])[s];
      const double hi = *std::max_element(w.begin(), w.end());
      const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0;
      std::vector<std::size_t> counts(bins, 0);
      for (double v : w) counts[std::min(bins - 1, static_cast<std::size_t>(v / width))]++;
      for (std::size_t b = 0; b < bins; ++b) {
        hist << methods[k].name << ',' << labels[s] << ',' << format_number(width * static_cast<double>(b)) << ','
             << format_number(width * static_cast<double>(b + 1)) << ',' << counts[b] << '\n';
      }
    }
  }
}

int cmd_diagnose(const DiagnoseOptions& o) {
  if (o.bins == 0) throw UsageError("--bins must be positive");
  Manifest manifest("diagnose");
  LoadedData data = load(o.data, manifest);
  const Nu nu = parse_nu(o.nu);
  std::optional<double> trunc;
  if (o.truncate_quantile > 0.0) trunc = o.truncate_quantile;
  manifest.config()["nu"] = o.nu;
  manifest.config()["truncate_quantile"] = trunc ? json(*trunc) : json(nullptr);
  manifest.config()["ci_level"] = o.ci_level;
  manifest.config()["bins"] = o.bins;

  std::vector<NamedWeights> methods{{"observed", false, uniform_weights(data.dm)}};
  json extra = json::object();
  for (MatchMode mode : {MatchMode::Unconstrained, MatchMode::Constrained}) {
    MatchSpec spec;
    spec.mode = mode;
    const WeightSolution sol = match(data.dm, spec);
    for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';
    std::optional<std::array<Vector, 2>> w;
    if (sol.status == MatchStatus::Matched) w = sol.weights;
    methods.push_back({to_string(mode), true, w});
    extra[to_string(mode)] = {{"status", to_string(sol.status)}, {"objective", sol.objective}};
  }
  try {
    const LogisticModel model = fit_logistic(data.dm);
    const PropensityWeights pw = pooled_weights(model, nu, trunc);
    for (const auto& w : pw.warnings) std::cerr << "warning: " << w << '\n';
    methods.push_back({"propensity", false, pw.weights});
    extra["propensity"] = {{"converged", model.converged}, {"separation", pw.separation}, {"nu0", pw.nu0}};
  } catch (const RankDeficientDesign& e) {
    std::cerr << "warning: propensity model not fitted: " << e.what() << '\n';
    methods.push_back({"propensity", false, std::nullopt});
    extra["propensity"] = {{"error", e.what()}};
  }

  const BalanceReport report = balance_table(data.dm, methods, data.table.study_labels());
  prepare_dir(o.out);
  json j = to_json(report);
  j["method_status"] = extra;
  if (data.table.response()) {
    json resp = json::object();
    for (const auto& m : methods) {
      if (m.weights) resp[m.name] = to_json(estimate_response(data.table, data.dm, *m.weights, o.ci_level));
    }
    j["response"] = resp;
  }
  write_json(fs::path(o.out) / "balance.json", j);
  {
    auto out = open_out(fs::path(o.out) / "balance.csv");
    write_balance_csv(out, report);
  }
  write_plot_data(o.out, data.dm, methods, data.table.study_labels(), o.bins);
  manifest.write(o.out);
  return kOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateOptions {
  std::string config;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string scale;
  bool log_replications = false;
  std::string out;
};

int cmd_simulate(const SimulateOptions& o) {
  if (!o.seed) throw UsageError("simulate requires --seed");
  Manifest manifest("simulate");
  SimulationConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw UsageError("cannot read " + o.config);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_simulation_config(ss.str());
    manifest.input("config", o.config);
  }
  if (o.reps) cfg.replications = *o.reps;
  cfg.seed = *o.seed;
  if (!o.scale.empty()) cfg.scale = parse_response_scale(o.scale);
  cfg.validate();
  const int threads = o.threads > 0 ? o.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  manifest.config() = json::parse(simulation_config_json(cfg));
  manifest.config()["threads"] = threads;

  prepare_dir(o.out);
  const auto progress = [](std::size_t done, std::size_t total) {
    std::cerr << "simulate: " << done << " / " << total << " replications\n";
  };
  const SimulationResult result = run_study(cfg, threads, progress);
  write_json(fs::path(o.out) / "summary.json", to_json(result.summary));
  {
    auto out = open_out(fs::path(o.out) / "ess.csv");
    write_ess_csv(out, result.summary);
  }
  {
    auto out = open_out(fs::path(o.out) / "maxweights.csv");
    write_maxweights_csv(out, result.summary);
  }
  {
    auto out = open_out(fs::path(o.out) / "ydiff.csv");
    write_ydiff_csv(out, result.summary);
  }
  if (o.log_replications) {
    auto out = open_out(fs::path(o.out) / "replications.csv");
    write_replications_csv(out, result.records);
  }
  manifest.write(o.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact matching of two studies by direct standardization"};
  app.set_version_flag("--version", std::string(EXACTMATCH_VERSION));
  app.require_subcommand(1);

  MatchOptions match_o;
  auto* match_cmd = app.add_subcommand("match", "Compute exact-matching weights");
  add_data_options(match_cmd, match_o.data);
  match_cmd->add_option("--mode", match_o.mode, "unconstrained or constrained")->capture_default_str();
  match_cmd->add_option("--columns", match_o.columns, "Covariates to balance (default: all)")->take_all();
  match_cmd->add_option("--max-weight", match_o.max_weight, "Cap on any single weight (weights sum to 1 per study)");
  match_cmd->add_option("--ci-level", match_o.ci_level, "Confidence level for response intervals")->capture_default_str();
  match_cmd->add_option("--out", match_o.out, "Output directory")->required();

  FeasibleOptions feas_o;
  auto* feas_cmd = app.add_subcommand("feasible", "Check whether exact-matching weights exist");
  add_data_options(feas_cmd, feas_o.data);
  feas_cmd->add_option("--mode", feas_o.mode, "unconstrained or constrained")->capture_default_str();
  feas_cmd->add_option("--witness", feas_o.witness, "Write a feasible weighting to this CSV");
  feas_cmd->add_option("--out", feas_o.out, "Output directory for the result and manifest");

  PropensityOptions ps_o;
  auto* ps_cmd = app.add_subcommand("propensity", "Propensity-score weights from logistic regression");
  add_data_options(ps_cmd, ps_o.data);
  ps_cmd->add_option("--nu", ps_o.nu, "observed, half, or the value of nu0")->capture_default_str();
  ps_cmd->add_option("--truncate-quantile", ps_o.truncate_quantile, "Cap raw weights at this pooled quantile");
  ps_cmd->add_option("--ci-level", ps_o.ci_level, "Confidence level for response intervals")->capture_default_str();
  ps_cmd->add_option("--out", ps_o.out, "Output directory")->required();

  DiagnoseOptions diag_o;
  auto* diag_cmd = app.add_subcommand("diagnose", "Balance table for all weighting methods");
  add_data_options(diag_cmd, diag_o.data);
  diag_cmd->add_option("--nu", diag_o.nu, "observed, half, or the value of nu0")->capture_default_str();
  diag_cmd->add_option("--truncate-quantile", diag_o.truncate_quantile, "Cap raw propensity weights at this quantile");
  diag_cmd->add_option("--ci-level", diag_o.ci_level, "Confidence level for response intervals")->capture_default_str();
  diag_cmd->add_option("--bins", diag_o.bins, "Histogram bins in plot data")->capture_default_str();
  diag_cmd->add_option("--out", diag_o.out, "Output directory")->required();

  SimulateOptions sim_o;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the two-study simulation");
  sim_cmd->add_option("--config", sim_o.config, "JSON simulation config")->check(CLI::ExistingFile);
  sim_cmd->add_option("--reps", sim_o.reps, "Number of replications");
  sim_cmd->add_option("--seed", sim_o.seed, "Master seed");
  sim_cmd->add_option("--threads", sim_o.threads, "Worker threads (default: available parallelism)");
  sim_cmd->add_option("--scale", sim_o.scale, "Response scale stored in generated tables");
  sim_cmd->add_flag("--log-replications", sim_o.log_replications, "Also write replications.csv");
  sim_cmd->add_option("--out", sim_o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*match_cmd) return cmd_match(match_o);
    if (*feas_cmd) return cmd_feasible(feas_o);
    if (*ps_cmd) return cmd_propensity(ps_o);
    if (*diag_cmd) return cmd_diagnose(diag_o);
    if (*sim_cmd) return cmd_simulate(sim_o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const exactmatch::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
