// Command-line front end over the C interface.
//
// Exit codes: 0 success, 1 internal error, 2 invalid configuration or input,
// 3 numerical failure, 4 I/O failure. Failures print one JSON error record on
// stderr.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "echoprep/echoprep.h"
#include "json.hpp"

namespace {

int exit_code(int status) {
  switch (status) {
    case ECHOPREP_OK: return 0;
    case ECHOPREP_INVALID_ARGUMENT: return 2;
    case ECHOPREP_NUMERICAL_ERROR: return 3;
    case ECHOPREP_IO_ERROR: return 4;
    default: return 1;
  }
}

const char* kind(int status) {
  switch (status) {
    case ECHOPREP_INVALID_ARGUMENT: return "invalid_argument";
    case ECHOPREP_NUMERICAL_ERROR: return "numerical_error";
    case ECHOPREP_IO_ERROR: return "io_error";
    default: return "internal_error";
  }
}

int report(int status, const std::string& subcommand, const std::string& message,
           const nlohmann::json& violations = nlohmann::json::array()) {
  nlohmann::json rec{{"status", "error"}, {"error", kind(status)}, {"subcommand", subcommand}, {"message", message}};
  if (!violations.empty()) rec["violations"] = violations;
  std::cerr << rec.dump() << "\n";
  return exit_code(status);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  echoprep_string_free(s);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust adiabatic-echo state preparation for Ising and Rydberg models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", echoprep_version());

  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = -1;
  std::string output_dir;
  bool validate_only = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "Gauge-fixed low-lying spectrum and perturbation matrix elements along s"},
      {"oracle", "First-order perturbative infidelity of a protocol"},
      {"landscape", "Cost landscape of the piecewise-linear protocol family with echo contours"},
      {"optimize", "Robust optimization (GRAPE, continuation in T, or Fourier ansatz)"},
      {"evaluate", "Infidelity of a protocol against field or disorder strength"},
      {"echo-check", "Segment amplitudes and phases of a protocol's echo structure"},
      {"noise-bench", "Time-dependent noise benchmark with a static reference"},
      {"diagnose", "Critical-window diagnostics and finite-size scaling fit"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "Override a configuration value: dotted.key=value");
    sub->add_option("-j,--jobs", jobs, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("-o,--output-dir", output_dir, "Artifact directory");
    sub->add_flag("--validate-only", validate_only, "Check the configuration and exit");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  std::ifstream in(config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  if (!in) return report(ECHOPREP_IO_ERROR, subcommand, "cannot read '" + config_path + "'");
  std::string config = buf.str();

  if (jobs >= 0) overrides.push_back("jobs=" + std::to_string(jobs));
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) return report(ECHOPREP_INVALID_ARGUMENT, subcommand, "override '" + o + "' is not key=value");
    char* next = nullptr;
    const int st = echoprep_config_set(config.c_str(), o.substr(0, eq).c_str(), o.substr(eq + 1).c_str(), &next);
    if (st != ECHOPREP_OK) return report(st, subcommand, echoprep_last_error());
    config = take(next);
  }

  char* violations = nullptr;
  int st = echoprep_validate_config(subcommand.c_str(), config.c_str(), &violations);
  if (st != ECHOPREP_OK) return report(st, subcommand, echoprep_last_error());
  const auto v = nlohmann::json::parse(take(violations));
  if (!v.empty()) return report(ECHOPREP_INVALID_ARGUMENT, subcommand, "invalid configuration", v);
  if (validate_only) {
    std::cout << nlohmann::json{{"status", "valid"}, {"subcommand", subcommand}}.dump() << "\n";
    return 0;
  }

  // Output directory: flag, then config, then environment, then cwd.
  if (output_dir.empty()) {
    const auto c = nlohmann::json::parse(config);
    if (c.contains("output_dir")) output_dir = c["output_dir"].get<std::string>();
  }
  if (output_dir.empty()) {
    if (const char* env = std::getenv("ECHOPREP_OUTPUT_DIR")) output_dir = env;
  }
  if (output_dir.empty()) output_dir = ".";

  char* summary = nullptr;
  st = echoprep_run(subcommand.c_str(), config.c_str(), output_dir.c_str(), &summary);
  if (st != ECHOPREP_OK) return report(st, subcommand, echoprep_last_error());
  std::cout << take(summary);
  return 0;
}
