#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = TEST_DATA_DIR;
const fs::path kWork = WORK_DIR;

struct Run {
  int code;
  std::string err;
};

Run run(const std::string& args, const std::string& tag) {
  fs::create_directories(kWork);
  const fs::path err = kWork / (tag + ".stderr");
  const std::string cmd = std::string("\"") + CLI_PATH + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data(const std::string& name) { return "\"" + (kData / name).string() + "\""; }
std::string out(const std::string& name) {
  fs::remove_all(kWork / name);
  return "\"" + (kWork / name).string() + "\"";
}

}  // namespace

TEST_CASE("match on overlapping data") {
  auto r = run("match " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json") + " --out " +
                   out("match_ok"),
               "match_ok");
  INFO(r.err);
  REQUIRE(r.code == 0);
  auto j = json::parse(slurp(kWork / "match_ok" / "balance.json"));
  CHECK(j["solution"]["status"] == "Matched");
  for (const auto& row : j["balance"]["rows"]) {
    const auto& m = row["methods"]["unconstrained"];
    if (!m["smd"].is_null()) CHECK(std::abs(m["smd"].get<double>()) <= 1e-8);
  }
  CHECK(fs::exists(kWork / "match_ok" / "weights.csv"));
  auto manifest = json::parse(slurp(kWork / "match_ok" / "manifest.json"));
  CHECK(manifest["subcommand"] == "match");
  CHECK(manifest["inputs"].size() == 2);
  CHECK(manifest["inputs"][0]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("match with inline covariate flags") {
  auto r = run("match " + data("overlapping.csv") +
                   " --study-col trial --study0 A --study1 B --response-col y --continuous age --binary male"
                   " --categorical region=north,south,east --mode constrained --out " +
                   out("match_flags"),
               "match_flags");
  INFO(r.err);
  CHECK((r.code == 0 || r.code == 2));
  CHECK(fs::exists(kWork / "match_flags" / "balance.json"));
}

TEST_CASE("match on disjoint data reports no solution") {
  auto r = run("match " + data("disjoint.csv") + " --schema " + data("disjoint.schema.json") + " --out " +
                   out("match_disjoint"),
               "match_disjoint");
  CHECK(r.code == 2);
  auto j = json::parse(slurp(kWork / "match_disjoint" / "balance.json"));
  CHECK(j["solution"]["status"] == "NoSolution");
}

TEST_CASE("undeclared factor column is a usage error naming the column") {
  auto r = run("match " + data("missing_directive.csv") +
                   " --study-col trial --study0 A --study1 B --response-col y --continuous age --out " +
                   out("match_missing"),
               "match_missing");
  CHECK(r.code == 1);
  CHECK(r.err.find("smoker") != std::string::npos);
}

TEST_CASE("non-numeric factor declared continuous names the column") {
  auto r = run("match " + data("missing_directive.csv") +
                   " --study-col trial --study0 A --study1 B --response-col y --continuous age smoker --out " +
                   out("match_bad_kind"),
               "match_bad_kind");
  CHECK(r.code == 1);
  CHECK(r.err.find("smoker") != std::string::npos);
}

TEST_CASE("feasible exit codes") {
  CHECK(run("feasible " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json"), "feas_ok").code ==
        0);
  CHECK(run("feasible " + data("disjoint.csv") + " --schema " + data("disjoint.schema.json"), "feas_no").code == 2);
  auto empty = run("feasible " + data("single_study.csv") +
                       " --study-col trial --study0 A --study1 B --response-col y --continuous age",
                   "feas_empty");
  CHECK(empty.code == 1);
}

TEST_CASE("feasible witness") {
  fs::create_directories(kWork);
  const fs::path w = kWork / "witness.csv";
  fs::remove(w);
  auto r = run("feasible " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json") + " --witness \"" +
                   w.string() + "\" --out " + out("feas_out"),
               "feas_witness");
  CHECK(r.code == 0);
  CHECK(fs::exists(w));
  CHECK(fs::exists(kWork / "feas_out" / "feasibility.json"));
}

TEST_CASE("propensity and diagnose") {
  auto p = run("propensity " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json") +
                   " --nu half --out " + out("ps"),
               "ps");
  INFO(p.err);
  CHECK(p.code == 0);
  auto pj = json::parse(slurp(kWork / "ps" / "propensity.json"));
  CHECK(pj.contains("model"));
  auto d = run("diagnose " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json") + " --out " +
                   out("diag"),
               "diag");
  INFO(d.err);
  CHECK(d.code == 0);
  for (const char* f : {"balance.json", "balance.csv", "plot_weights.csv", "plot_histogram.csv", "manifest.json"})
    CHECK(fs::exists(kWork / "diag" / f));
}

TEST_CASE("usage errors") {
  CHECK(run("", "none").code == 1);
  CHECK(run("frobnicate", "unknown").code == 1);
  CHECK(run("match " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json"), "no_out").code == 1);
  CHECK(run("match " + data("overlapping.csv") + " --schema " + data("overlapping.schema.json") +
                " --mode sideways --out " + out("bad_mode"),
            "bad_mode")
            .code == 1);
  CHECK(run("--version", "version").code == 0);
  CHECK(run("--help", "help").code == 0);
}

TEST_CASE("simulate validation") {
  CHECK(run("simulate --reps 0 --seed 1 --out " + out("sim_zero"), "sim_zero").code == 1);
  CHECK(run("simulate --reps 2 --out " + out("sim_noseed"), "sim_noseed").code == 1);
  fs::create_directories(kWork);
  {
    std::ofstream bad(kWork / "bad_config.json");
    bad << R"({"rho": [0.3, 0.5]})";
  }
  auto r = run("simulate --config \"" + (kWork / "bad_config.json").string() + "\" --reps 2 --seed 1 --out " +
                   out("sim_badcfg"),
               "sim_badcfg");
  CHECK(r.code == 1);
  CHECK(r.err.find("rho") != std::string::npos);
}

TEST_CASE("simulate is deterministic") {
  const std::string cfg = data("sim_small.json");
  auto a = run("simulate --config " + cfg + " --reps 10 --seed 1 --out " + out("sim_a"), "sim_a");
  auto b = run("simulate --config " + cfg + " --reps 10 --seed 1 --threads 3 --out " + out("sim_b"), "sim_b");
  INFO(a.err);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(kWork / "sim_a" / "summary.json") == slurp(kWork / "sim_b" / "summary.json"));
  auto j = json::parse(slurp(kWork / "sim_a" / "summary.json"));
  CHECK(j["methods"].size() == 4);
  CHECK(j["config"]["replications"] == 10);
  for (const char* f : {"ess.csv", "maxweights.csv", "ydiff.csv", "manifest.json"}) CHECK(fs::exists(kWork / "sim_a" / f));
}
