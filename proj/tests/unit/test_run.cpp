#include "doctest.h"
#include "echoprep/error.hpp"
#include "echoprep/protocol.hpp"
#include "echoprep/run.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace echoprep;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("echoprep_test_run_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool has_violation(const std::vector<ConfigViolation>& v, const std::string& path) {
  for (const auto& x : v) {
    if (x.path == path) return true;
  }
  return false;
}

const json base = {{"model", {{"kind", "ising"}, {"n_sites", 4}}},
                   {"protocol", {{"source", "linear"}, {"total_time", 3.2}, {"n_steps", 24}}},
                   {"ensemble", {{"sigma", 0.01}, {"n_samples", 4}, {"seed", 3}}},
                   {"scan", {{"points", 41}}}};

}  // namespace

TEST_CASE("validation reports dotted paths") {
  json c = base;
  c["model"]["n_sites"] = 1;
  c["ensemble"]["sigma"] = -0.1;
  c["scan"]["colour"] = "red";
  c["optimizer"] = {{"method", "newton"}};
  const auto v = validate_config("optimize", c.dump());
  CHECK(has_violation(v, "model.n_sites"));
  CHECK(has_violation(v, "ensemble.sigma"));
  CHECK(has_violation(v, "scan.colour"));
  CHECK(has_violation(v, "optimizer.method"));

  CHECK(validate_config("oracle", base.dump()).empty());
  CHECK(has_violation(validate_config("oracle", "[1]"), ""));
  CHECK(has_violation(validate_config("oracle", "{"), ""));

  json missing = base;
  missing.erase("protocol");
  CHECK(has_violation(validate_config("optimize", missing.dump()), "protocol"));

  json ryd = base;
  ryd["model"] = {{"kind", "rydberg"}, {"n_sites", 4}};
  const auto rv = validate_config("spectrum", ryd.dump());
  CHECK(has_violation(rv, "model.n_sites"));
  CHECK(has_violation(rv, "model"));

  json noise = base;
  noise["noise"] = {{"tau_c_over_T", {1.0, -2.0}}, {"protocols", {{{"id", "a"}, {"path", "/nonexistent"}}}}};
  const auto nv = validate_config("noise-bench", noise.dump());
  CHECK(has_violation(nv, "noise.tau_c_over_T[1]"));
  CHECK(has_violation(nv, "noise.protocols[0].path"));

  json sched = base;
  sched["optimizer"] = {{"method", "continuation"}, {"t_schedule", {{"start", 2.0}, {"step", 1.0}}}};
  CHECK(has_violation(validate_config("optimize", sched.dump()), "optimizer.t_schedule.end"));
}

TEST_CASE("dotted overrides") {
  const std::string c = set_config_value(base.dump(), "optimizer.t_schedule.start", "2.5");
  const json j = json::parse(c);
  CHECK(j["optimizer"]["t_schedule"]["start"] == 2.5);
  CHECK(json::parse(set_config_value(c, "target", "ground_state"))["target"] == "ground_state");
  CHECK(json::parse(set_config_value(c, "scan.use_symmetry", "false"))["scan"]["use_symmetry"] == false);
  CHECK_THROWS_AS(set_config_value(c, "model.n_sites.x", "1"), InvalidArgument);
  CHECK_THROWS_AS(set_config_value(c, "a..b", "1"), InvalidArgument);
  CHECK_THROWS_AS(run_subcommand("oracle", "{}", "."), InvalidArgument);
}

TEST_CASE("subcommands write their artifacts") {
  const fs::path dir = scratch("artifacts");
  json c = base;
  c["oracle"] = {{"epsilon", 1e-3}};
  c["evaluate"] = {{"parameter", "sigma"}, {"min", 0.0}, {"max", 0.02}, {"points", 3}};
  c["landscape"] = {{"total_time", 3.2}, {"n_grid", 5}, {"n_steps", 24}};
  c["diagnose"] = {{"lambda_min", 0.2}, {"lambda_max", 0.8}, {"points", 13}};
  for (const std::string sub : {"spectrum", "oracle", "evaluate", "echo-check", "landscape", "diagnose"}) {
    CAPTURE(sub);
    const json r = json::parse(run_subcommand(sub, c.dump(), (dir / sub).string()));
    CHECK(r["status"] == "ok");
    REQUIRE(!r["artifacts"].empty());
    for (const auto& a : r["artifacts"]) CHECK(fs::exists(a.get<std::string>()));
  }
  const std::string csv = slurp(dir / "evaluate" / "evaluate.csv");
  CHECK(csv.rfind("sigma,mean_infidelity\n", 0) == 0);
  CHECK(slurp(dir / "landscape" / "landscape.csv").rfind("sII,sIII,cost", 0) == 0);
  const json w = json::parse(slurp(dir / "diagnose" / "window.json"));
  CHECK(w["lambda_lo"].get<double>() <= w["lambda_hi"].get<double>());
}

TEST_CASE("optimization output is identical across job counts") {
  json c = base;
  c["optimizer"] = {{"method", "grape"}, {"max_iterations", 15}};
  std::string reports[2];
  std::string protocols[2];
  int idx = 0;
  for (int jobs : {1, 3}) {
    c["jobs"] = jobs;
    const fs::path dir = scratch("jobs" + std::to_string(jobs));
    run_subcommand("optimize", c.dump(), dir.string());
    protocols[idx] = slurp(dir / "protocol.txt");
    json r = json::parse(slurp(dir / "report.json"));
    r.erase("wall_seconds");
    reports[idx] = r.dump();
    ++idx;
  }
  CHECK(protocols[0] == protocols[1]);
  CHECK(reports[0] == reports[1]);
}

TEST_CASE("continuation writes one protocol per leg and a crossover") {
  const fs::path dir = scratch("continuation");
  json c = base;
  c["optimizer"] = {{"method", "continuation"},
                    {"max_iterations", 10},
                    {"reference", true},
                    {"t_schedule", {{"start", 2.0}, {"step", 1.0}, {"end", 4.0}, {"direction", "both"}}}};
  const json r = json::parse(run_subcommand("optimize", c.dump(), dir.string()));
  CHECK(r["result"]["legs"].size() == 3);
  for (const char* t : {"2", "3", "4"}) {
    const auto p = read_protocol((dir / (std::string("protocol_T") + t + ".txt")).string());
    CHECK(p.total_time == doctest::Approx(std::stod(t)));
  }
  CHECK(slurp(dir / "cost_vs_T.csv").rfind("T,cost,reference_cost,crossings\n", 0) == 0);
  CHECK(r["result"].contains("t_star"));
}
