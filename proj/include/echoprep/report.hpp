#pragma once

// JSON documents for run artifacts. Floating-point values round-trip exactly.

#include <string>
#include <vector>

#include "echoprep/diagnostics.hpp"
#include "echoprep/noise.hpp"
#include "echoprep/optimizer.hpp"
#include "echoprep/oracle.hpp"

namespace echoprep {

std::string to_json(const OptimizationReport& report);
std::string to_json(const EchoReport& report);
std::string to_json(const NoiseBenchmark& benchmark);
std::string to_json(const CriticalWindow& window);
std::string to_json(const ScalingFit& fit);

OptimizationReport optimization_report_from_json(const std::string& text);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace echoprep
