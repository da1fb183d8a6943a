#include "echoprep/report.hpp"

#include <fstream>
#include <sstream>

#include "echoprep/error.hpp"
#include "json.hpp"

namespace echoprep {

using nlohmann::json;

namespace {

json complex_array(const std::vector<cplx>& v) {
  json a = json::array();
  for (const auto& z : v) a.push_back({z.real(), z.imag()});
  return a;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string to_json(const OptimizationReport& r) {
  json j;
  j["total_time"] = r.protocol.total_time;
  j["n_steps"] = r.protocol.n_steps();
  j["protocol"] = r.protocol.values;
  j["cost_trace"] = r.cost_trace;
  j["gradient_norm_trace"] = r.gradient_norm_trace;
  j["initial_cost"] = r.initial_cost;
  j["final_cost"] = r.final_cost;
  j["final_infidelity"] = r.final_infidelity;
  j["sample_fidelities"] = r.sample_fidelities;
  j["iterations"] = r.iterations;
  j["wall_seconds"] = r.wall_seconds;
  j["termination"] = r.termination;
  j["converged"] = r.converged;
  j["settings"] = {{"eta", r.eta},
                   {"mu", r.mu},
                   {"gradient_mode", to_string(r.gradient_mode)},
                   {"sigma", r.sigma},
                   {"n_samples", r.n_samples},
                   {"seed", r.seed}};
  if (!r.goat_coefficients.empty()) j["goat_coefficients"] = r.goat_coefficients;
  return dump(j);
}

OptimizationReport optimization_report_from_json(const std::string& text) {
  OptimizationReport r;
  try {
    const json j = json::parse(text);
    r.protocol.total_time = j.at("total_time").get<double>();
    r.protocol.values = j.at("protocol").get<std::vector<double>>();
    r.cost_trace = j.at("cost_trace").get<std::vector<double>>();
    r.gradient_norm_trace = j.at("gradient_norm_trace").get<std::vector<double>>();
    r.initial_cost = j.at("initial_cost").get<double>();
    r.final_cost = j.at("final_cost").get<double>();
    r.final_infidelity = j.at("final_infidelity").get<double>();
    r.sample_fidelities = j.at("sample_fidelities").get<std::vector<double>>();
    r.iterations = j.at("iterations").get<int>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.termination = j.at("termination").get<std::string>();
    r.converged = j.at("converged").get<bool>();
    const json& s = j.at("settings");
    r.eta = s.at("eta").get<double>();
    r.mu = s.at("mu").get<double>();
    r.gradient_mode = parse_derivative_mode(s.at("gradient_mode").get<std::string>());
    r.sigma = s.at("sigma").get<double>();
    r.n_samples = s.at("n_samples").get<std::size_t>();
    r.seed = s.at("seed").get<std::uint64_t>();
    if (j.contains("goat_coefficients")) r.goat_coefficients = j["goat_coefficients"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed optimization report: ") + e.what());
  }
  r.protocol.validate();
  return r;
}

std::string to_json(const EchoReport& r) {
  json j;
  j["s_c"] = r.s_c;
  j["crossing_times"] = r.crossing_times;
  j["n_crossings"] = r.crossing_times.size();
  json segs = json::array();
  for (const auto& s : r.segments) {
    segs.push_back({{"t_begin", s.t_begin}, {"t_end", s.t_end}, {"ordered", s.ordered}});
  }
  j["segments"] = segs;
  j["amplitudes"] = complex_array(r.amplitudes);
  j["phases"] = r.phases;
  j["predicted_coefficient"] = r.predicted_coefficient;
  j["predicted_infidelity"] = r.predicted_infidelity;
  j["interference"] = r.amplitudes.size() >= 2;
  return dump(j);
}

std::string to_json(const NoiseBenchmark& b) {
  json j;
  j["sigma"] = b.sigma;
  j["n_realizations"] = b.n_realizations;
  j["master_seed"] = b.master_seed;
  json rows = json::array();
  for (const auto& r : b.rows) {
    rows.push_back({{"tau_c", r.tau_c},
                    {"protocol_id", r.protocol_id},
                    {"mean_infidelity", r.mean_infidelity},
                    {"stderr", r.stderr_infidelity},
                    {"n_ok", r.n_ok},
                    {"n_failed", r.n_failed},
                    {"delta_f", r.delta_f},
                    {"f_max", r.f_max}});
  }
  j["rows"] = rows;
  json refs = json::array();
  for (const auto& r : b.static_reference) {
    refs.push_back({{"protocol_id", r.protocol_id},
                    {"static_mean_infidelity", r.mean_infidelity},
                    {"noiseless_infidelity", r.noiseless_infidelity}});
  }
  j["static_reference"] = refs;
  return dump(j);
}

std::string to_json(const CriticalWindow& w) {
  json j{{"lambda_lo", w.lambda_lo},
         {"lambda_hi", w.lambda_hi},
         {"peak_dN_dlambda", w.peak_dn},
         {"peak_chi", w.peak_chi},
         {"midpoint", w.midpoint()}};
  return dump(j);
}

std::string to_json(const ScalingFit& f) {
  json j{{"slope", f.slope},
         {"intercept", f.intercept},
         {"residual", f.residual},
         {"n_used", f.n_used},
         {"n_excluded", f.n_excluded},
         {"poor_collapse", f.poor_collapse},
         {"warnings", f.warnings}};
  return dump(j);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("error writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace echoprep
