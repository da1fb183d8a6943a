#pragma once

// Structured run configurations (JSON text) and subcommand dispatch shared by
// the C API and the command-line front end.

#include <string>
#include <vector>

#include "echoprep/models.hpp"
#include "echoprep/hilbert.hpp"

namespace echoprep {

struct ConfigViolation {
  std::string path;  // dotted key path, empty for the document itself
  std::string message;
};

// Subcommands: spectrum, oracle, landscape, optimize, evaluate, echo-check,
// noise-bench, diagnose.
const std::vector<std::string>& subcommands();

// Full static validation without execution; never throws.
std::vector<ConfigViolation> validate_config(const std::string& subcommand, const std::string& config_json);

// Sets a scalar at a dotted key path. The value is parsed as JSON when
// possible and kept as a string otherwise.
std::string set_config_value(const std::string& config_json, const std::string& dotted_key,
                             const std::string& value);

// Model from a JSON "model" block; throws InvalidArgument on schema errors.
Model model_from_json(const std::string& model_json);

// "auto" selects the model's default cat state.
StateVector target_from_name(const Model& model, const std::string& name);

// Runs a validated configuration and writes artifacts under output_dir.
// Returns a JSON summary. Throws InvalidArgument, NumericalError or IoError.
std::string run_subcommand(const std::string& subcommand, const std::string& config_json,
                           const std::string& output_dir);

}  // namespace echoprep
