#include "echoprep/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "echoprep/diagnostics.hpp"
#include "echoprep/error.hpp"
#include "echoprep/noise.hpp"
#include "echoprep/optimizer.hpp"
#include "echoprep/oracle.hpp"
#include "echoprep/parallel.hpp"
#include "echoprep/report.hpp"
#include "echoprep/targets.hpp"
#include "json.hpp"

namespace echoprep {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"spectrum", "oracle",      "landscape",  "optimize",
                                                 "evaluate", "echo-check", "noise-bench", "diagnose"};
  return names;
}

// --- schema --------------------------------------------------------------------

namespace {

// Leaf types: number, number>0, number>=0, int>=0, int>=1, int>=2, int>=3,
// bool, string, number[], int[], s_c (number or "auto"), protocols[],
// enum:a|b|c. Objects nest.
const json& schema() {
  static const json s = json::parse(R"({
    "model": {"kind": "enum:ising|rydberg", "n_sites": "int>=2", "j0": "number>0",
              "perturbation": "enum:Z|ZZZ|X|XX", "geometry": "enum:chain|square|ladder|ring",
              "dims": "int[]", "positions_file": "string", "blockade_radius": "number>0",
              "omega0": "number>0", "rise_fraction": "number>0", "delta_min": "number",
              "delta_max": "number", "truncation_radius": "number>0", "symmetry": "int[]"},
    "target": "enum:auto|ising_ghz_plus|rydberg_ghz_plus|z3_cat|z4_cat|ground_state",
    "krylov": {"tol": "number>0", "max_dim": "int>=2", "max_splits": "int>=0"},
    "jobs": "int>=0",
    "output_dir": "string",
    "protocol": {"source": "enum:linear|file|piecewise|goat", "total_time": "number>0",
                 "n_steps": "int>=1", "s0": "number", "s1": "number", "path": "string",
                 "s_ii": "number", "s_iii": "number", "coefficients": "number[]"},
    "ensemble": {"sigma": "number>=0", "n_samples": "int>=1", "seed": "int>=0"},
    "scan": {"s_min": "number", "s_max": "number", "points": "int>=1", "n_levels": "int>=2",
             "overlap_threshold": "number>0", "use_symmetry": "bool", "seed": "int>=0"},
    "oracle": {"epsilon": "number", "n_sectors": "int>=2", "ordered_only": "bool", "s_c": "s_c",
               "clip": "bool"},
    "echo": {"s_c": "s_c", "epsilon": "number"},
    "landscape": {"total_time": "number>0", "n_grid": "int>=2", "n_steps": "int>=3", "s_c": "s_c"},
    "optimizer": {"method": "enum:grape|continuation|goat", "eta": "number>=0", "mu": "number>=0",
                  "gradient_mode": "enum:first_order|exact_frechet", "gradient_tolerance": "number>0",
                  "function_tolerance": "number>0", "max_iterations": "int>=0", "lbfgs_memory": "int>=1",
                  "t_schedule": {"start": "number>0", "step": "number>0", "end": "number>0",
                                 "direction": "enum:forward|reverse|both"},
                  "reference": "bool", "margin": "number>=0", "nc_max": "int>=1", "c1_init": "number",
                  "n_steps": "int>=1", "total_time": "number>0", "s_c": "s_c"},
    "evaluate": {"parameter": "enum:field|sigma", "min": "number", "max": "number", "points": "int>=1",
                 "perturbation": "enum:Z|ZZZ|X|XX"},
    "noise": {"tau_c_over_T": "number[]", "n_realizations": "int>=1", "sigma": "number>=0",
              "seed": "int>=0", "protocols": "protocols[]", "quadrature_nodes": "int>=1"},
    "diagnose": {"lambda_min": "number", "lambda_max": "number", "points": "int>=3",
                 "delta_lambda": "number>0", "scaling_data": "string"}
  })");
  return s;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_leaf(const json& v, const std::string& type, const std::string& path, std::vector<ConfigViolation>& out) {
  const auto bad = [&](const std::string& msg) { out.push_back({path, msg}); };
  if (type.rfind("enum:", 0) == 0) {
    const std::string opts = type.substr(5);
    if (!v.is_string()) return bad("expected one of " + opts);
    std::stringstream ss(opts);
    std::string item;
    while (std::getline(ss, item, '|')) {
      if (item == v.get<std::string>()) return;
    }
    return bad("'" + v.get<std::string>() + "' is not one of " + opts);
  }
  if (type == "bool") {
    if (!v.is_boolean()) bad("expected true or false");
    return;
  }
  if (type == "string") {
    if (!v.is_string()) bad("expected a string");
    return;
  }
  if (type == "s_c") {
    if (v.is_string() && v.get<std::string>() == "auto") return;
    if (!v.is_number() || !std::isfinite(v.get<double>())) bad("expected a number or \"auto\"");
    return;
  }
  if (type == "number[]" || type == "int[]") {
    if (!v.is_array()) return bad("expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = type == "int[]" ? v[i].is_number_integer() : v[i].is_number();
      if (!ok) out.push_back({path + "[" + std::to_string(i) + "]", type == "int[]" ? "expected an integer" : "expected a number"});
    }
    return;
  }
  if (type == "protocols[]") {
    if (!v.is_array()) return bad("expected an array of {\"id\", \"path\"} objects");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!v[i].is_object()) {
        out.push_back({p, "expected an object"});
        continue;
      }
      for (auto it = v[i].begin(); it != v[i].end(); ++it) {
        if (it.key() != "id" && it.key() != "path") out.push_back({join(p, it.key()), "unknown key"});
      }
      for (const char* k : {"id", "path"}) {
        if (!v[i].contains(k) || !v[i][k].is_string()) out.push_back({join(p, k), "required string"});
      }
    }
    return;
  }
  const bool integer = type.rfind("int", 0) == 0;
  if (integer ? !v.is_number_integer() : !v.is_number()) return bad(integer ? "expected an integer" : "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) return bad("expected a finite number");
  const auto pos = type.find_first_of("<>");
  if (pos == std::string::npos) return;
  const bool inclusive = type.find(">=") != std::string::npos;
  const double bound = std::stod(type.substr(pos + (inclusive ? 2 : 1)));
  if (inclusive ? x < bound : x <= bound) {
    bad("must be " + std::string(inclusive ? ">= " : "> ") + type.substr(pos + (inclusive ? 2 : 1)));
  }
}

void check_node(const json& v, const json& s, const std::string& path, std::vector<ConfigViolation>& out) {
  if (s.is_string()) return check_leaf(v, s.get<std::string>(), path, out);
  if (!v.is_object()) {
    out.push_back({path, "expected an object"});
    return;
  }
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (!s.contains(it.key())) {
      out.push_back({join(path, it.key()), "unknown key"});
      continue;
    }
    check_node(it.value(), s[it.key()], join(path, it.key()), out);
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.is_object() && j.contains(key) ? j[key].get<T>() : fallback;
}

const json& section(const json& c, const char* key) {
  static const json empty = json::object();
  return c.contains(key) ? c[key] : empty;
}

bool file_exists(const std::string& p) { return fs::is_regular_file(p); }

void semantic_checks(const std::string& sub, const json& c, std::vector<ConfigViolation>& out) {
  const json& m = section(c, "model");
  const std::string kind = get_or<std::string>(m, "kind", "");
  if (!c.contains("model")) out.push_back({"model", "required section"});
  else if (kind.empty()) out.push_back({"model.kind", "required"});
  if (kind == "ising") {
    if (!m.contains("n_sites")) out.push_back({"model.n_sites", "required for Ising models"});
    for (const char* k : {"geometry", "dims", "positions_file", "blockade_radius", "omega0", "rise_fraction",
                          "delta_min", "delta_max", "truncation_radius", "symmetry"}) {
      if (m.contains(k)) out.push_back({join("model", k), "not used by Ising models"});
    }
    if (m.contains("n_sites") && m["n_sites"].is_number_integer() && m["n_sites"].get<long>() > kMaxSites) {
      out.push_back({"model.n_sites", "must be <= " + std::to_string(kMaxSites)});
    }
  }
  if (kind == "rydberg") {
    for (const char* k : {"n_sites", "j0", "perturbation"}) {
      if (m.contains(k)) out.push_back({join("model", k), "not used by Rydberg models"});
    }
    const bool has_geom = m.contains("geometry");
    const bool has_file = m.contains("positions_file");
    if (has_geom == has_file) out.push_back({"model", "exactly one of geometry or positions_file is required"});
    if (has_geom && !m.contains("dims")) out.push_back({"model.dims", "required with geometry"});
    if (has_file && m["positions_file"].is_string() && !file_exists(m["positions_file"].get<std::string>())) {
      out.push_back({"model.positions_file", "file not found"});
    }
    if (m.contains("rise_fraction") && m["rise_fraction"].is_number() && m["rise_fraction"].get<double>() > 0.5) {
      out.push_back({"model.rise_fraction", "must be <= 0.5"});
    }
  }
  const json& p = section(c, "protocol");
  const std::string src = get_or<std::string>(p, "source", "");
  if (c.contains("protocol")) {
    if (src.empty()) out.push_back({"protocol.source", "required"});
    if (src == "file") {
      if (!p.contains("path")) out.push_back({"protocol.path", "required for file protocols"});
      else if (p["path"].is_string() && !file_exists(p["path"].get<std::string>())) out.push_back({"protocol.path", "file not found"});
    }
    if ((src == "linear" || src == "piecewise" || src == "goat") && !p.contains("total_time")) {
      out.push_back({"protocol.total_time", "required for " + src + " protocols"});
    }
    if (src == "piecewise") {
      for (const char* k : {"s_ii", "s_iii"}) {
        if (!p.contains(k)) out.push_back({join("protocol", k), "required for piecewise protocols"});
      }
    }
    if (src == "goat" && !p.contains("coefficients")) out.push_back({"protocol.coefficients", "required for goat protocols"});
  }
  const json& s = section(c, "scan");
  if (s.contains("s_min") && s.contains("s_max") && s["s_min"].is_number() && s["s_max"].is_number() &&
      !(s["s_max"].get<double>() > s["s_min"].get<double>())) {
    out.push_back({"scan.s_max", "must exceed scan.s_min"});
  }
  const json& d = section(c, "diagnose");
  if (d.contains("lambda_min") && d.contains("lambda_max") && d["lambda_min"].is_number() && d["lambda_max"].is_number() &&
      !(d["lambda_max"].get<double>() > d["lambda_min"].get<double>())) {
    out.push_back({"diagnose.lambda_max", "must exceed diagnose.lambda_min"});
  }
  if (d.contains("scaling_data") && d["scaling_data"].is_string() && !file_exists(d["scaling_data"].get<std::string>())) {
    out.push_back({"diagnose.scaling_data", "file not found"});
  }
  const json& e = section(c, "evaluate");
  if (e.contains("min") && e.contains("max") && e["min"].is_number() && e["max"].is_number() &&
      e["max"].get<double>() < e["min"].get<double>()) {
    out.push_back({"evaluate.max", "must be >= evaluate.min"});
  }
  const json& o = section(c, "optimizer");
  const json& ts = section(o, "t_schedule");
  if (ts.contains("start") && ts.contains("end") && ts["start"].is_number() && ts["end"].is_number() &&
      ts["end"].get<double>() < ts["start"].get<double>()) {
    out.push_back({"optimizer.t_schedule.end", "must be >= start"});
  }
  const json& n = section(c, "noise");
  if (n.contains("protocols") && n["protocols"].is_array()) {
    for (std::size_t i = 0; i < n["protocols"].size(); ++i) {
      const json& item = n["protocols"][i];
      if (item.is_object() && item.contains("path") && item["path"].is_string() &&
          !file_exists(item["path"].get<std::string>())) {
        out.push_back({"noise.protocols[" + std::to_string(i) + "].path", "file not found"});
      }
    }
  }

  // Per-subcommand requirements.
  const auto need = [&](const char* key) {
    if (!c.contains(key)) out.push_back({key, "required section for " + sub});
  };
  if (sub == "oracle" || sub == "optimize" || sub == "evaluate" || sub == "echo-check") need("protocol");
  if (sub == "landscape") {
    need("landscape");
    if (!section(c, "landscape").contains("total_time")) out.push_back({"landscape.total_time", "required"});
  }
  if (sub == "optimize") {
    const std::string method = get_or<std::string>(o, "method", "grape");
    if (method == "continuation" && !o.contains("t_schedule")) out.push_back({"optimizer.t_schedule", "required for continuation"});
    if (method == "continuation" && o.contains("t_schedule")) {
      for (const char* k : {"start", "step", "end"}) {
        if (!ts.contains(k)) out.push_back({join("optimizer.t_schedule", k), "required"});
      }
    }
  }
  if (sub == "evaluate") {
    need("evaluate");
    for (const char* k : {"parameter", "min", "max", "points"}) {
      if (!e.contains(k)) out.push_back({join("evaluate", k), "required"});
    }
    if (get_or<std::string>(e, "parameter", "") == "field" && kind == "rydberg") {
      out.push_back({"evaluate.parameter", "field sweeps need an Ising model"});
    }
    if (e.contains("perturbation") && kind == "rydberg") out.push_back({"evaluate.perturbation", "Ising only"});
  }
  if (sub == "noise-bench") {
    need("noise");
    if (kind == "rydberg") out.push_back({"model.kind", "the noise benchmark needs an Ising model"});
    if (!n.contains("protocols") || (n["protocols"].is_array() && n["protocols"].empty())) {
      out.push_back({"noise.protocols", "at least one protocol is required"});
    }
    if (!n.contains("tau_c_over_T")) out.push_back({"noise.tau_c_over_T", "required"});
    else if (n["tau_c_over_T"].is_array()) {
      for (std::size_t i = 0; i < n["tau_c_over_T"].size(); ++i) {
        if (n["tau_c_over_T"][i].is_number() && !(n["tau_c_over_T"][i].get<double>() > 0.0)) {
          out.push_back({"noise.tau_c_over_T[" + std::to_string(i) + "]", "must be > 0"});
        }
      }
    }
  }
  if (sub == "spectrum" && kind == "rydberg") {
    if (!(section(c, "ensemble").contains("sigma") && section(c, "ensemble")["sigma"].is_number() &&
          section(c, "ensemble")["sigma"].get<double>() > 0.0)) {
      out.push_back({"ensemble.sigma", "Rydberg scans need sigma > 0 to define the displacement operator"});
    }
  }
}

}  // namespace

std::vector<ConfigViolation> validate_config(const std::string& subcommand, const std::string& config_json) {
  std::vector<ConfigViolation> out;
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end()) {
    out.push_back({"", "unknown subcommand '" + subcommand + "'"});
    return out;
  }
  json c;
  try {
    c = json::parse(config_json);
  } catch (const json::exception& e) {
    out.push_back({"", std::string("config is not valid JSON: ") + e.what()});
    return out;
  }
  if (!c.is_object()) {
    out.push_back({"", "config must be a JSON object"});
    return out;
  }
  check_node(c, schema(), "", out);
  const bool typed = out.empty();
  try {
    semantic_checks(subcommand, c, out);
  } catch (const json::exception& e) {
    // Ill-typed values already reported above can trip the semantic pass.
    if (typed) out.push_back({"", e.what()});
  }
  return out;
}

std::string set_config_value(const std::string& config_json, const std::string& dotted_key,
                             const std::string& value) {
  json c;
  try {
    c = config_json.empty() ? json::object() : json::parse(config_json);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (dotted_key.empty()) throw InvalidArgument("empty override key");
  json* node = &c;
  std::stringstream ss(dotted_key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw InvalidArgument("malformed override key '" + dotted_key + "'");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw InvalidArgument("override '" + dotted_key + "' descends into a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw InvalidArgument("override '" + dotted_key + "' descends into a non-object");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  (*node)[parts.back()] = parsed;
  return c.dump(2);
}

// --- execution -------------------------------------------------------------------

namespace {

struct Context {
  json config;
  fs::path out_dir;
  std::unique_ptr<Model> model;
  KrylovOptions krylov;
  std::vector<std::string> artifacts;

  std::string path(const std::string& name) {
    const std::string p = (out_dir / name).string();
    artifacts.push_back(p);
    return p;
  }
};

std::unique_ptr<Model> make_model(const json& m) {
  const std::string kind = m.at("kind").get<std::string>();
  if (kind == "ising") {
    IsingParams p;
    p.n_sites = m.at("n_sites").get<int>();
    p.j0 = get_or<double>(m, "j0", 1.0);
    p.perturbation = parse_ising_perturbation(get_or<std::string>(m, "perturbation", "Z"));
    return std::make_unique<Model>(p);
  }
  RydbergParams p;
  if (m.contains("geometry")) {
    const auto dims = m.at("dims").get<std::vector<int>>();
    const Geometry g = build_geometry(parse_geometry_kind(m["geometry"].get<std::string>()), dims);
    p.positions = g.positions;
    p.symmetry = g.symmetry;
  } else {
    p.positions = read_geometry(m.at("positions_file").get<std::string>());
  }
  if (m.contains("symmetry")) p.symmetry = m["symmetry"].get<std::vector<int>>();
  p.blockade_radius = get_or<double>(m, "blockade_radius", p.blockade_radius);
  p.omega0 = get_or<double>(m, "omega0", p.omega0);
  p.rise_fraction = get_or<double>(m, "rise_fraction", p.rise_fraction);
  p.delta_min = get_or<double>(m, "delta_min", p.delta_min);
  p.delta_max = get_or<double>(m, "delta_max", p.delta_max);
  if (m.contains("truncation_radius")) p.truncation_radius = m["truncation_radius"].get<double>();
  return std::make_unique<Model>(p);
}

StateVector make_target(const Context& ctx) {
  return target_from_name(*ctx.model, get_or<std::string>(ctx.config, "target", "auto"));
}

ControlProtocol make_protocol(const json& p, int default_steps = 150) {
  const std::string src = p.at("source").get<std::string>();
  if (src == "file") return read_protocol(p.at("path").get<std::string>());
  const double t = p.at("total_time").get<double>();
  const int n = get_or<int>(p, "n_steps", default_steps);
  if (src == "linear") return ControlProtocol::linear(t, n, get_or<double>(p, "s0", 0.0), get_or<double>(p, "s1", 1.0));
  if (src == "piecewise") return piecewise_protocol(t, p.at("s_ii").get<double>(), p.at("s_iii").get<double>(), n);
  GoatAnsatz a{p.at("coefficients").get<std::vector<double>>(), t};
  return a.materialize(n);
}

DisorderEnsemble make_ensemble(const Context& ctx) {
  const json& e = section(ctx.config, "ensemble");
  return sample_disorder(*ctx.model, get_or<double>(e, "sigma", 0.0), get_or<int>(e, "n_samples", 1),
                         get_or<std::uint64_t>(e, "seed", 0));
}

CostOptions cost_options(const Context& ctx) {
  CostOptions o;
  o.krylov = ctx.krylov;
  return o;
}

std::vector<double> lambda_grid(const Context& ctx) {
  const json& d = section(ctx.config, "diagnose");
  double lo = 0.0, hi = 1.0;
  if (const auto* r = ctx.model->rydberg()) {
    lo = r->delta_min;
    hi = r->delta_max;
  }
  return uniform_grid(get_or<double>(d, "lambda_min", lo), get_or<double>(d, "lambda_max", hi),
                      get_or<int>(d, "points", 81));
}

DiagnosticOptions diagnostic_options(const Context& ctx) {
  DiagnosticOptions o;
  o.delta_lambda = get_or<double>(section(ctx.config, "diagnose"), "delta_lambda", 0.002);
  return o;
}

// Ising: 1/2. Rydberg: the control value at the midpoint of the critical window.
double resolve_s_c(Context& ctx, const json& value) {
  if (value.is_number()) return value.get<double>();
  if (ctx.model->kind() == ModelKind::ising) return 0.5;
  const auto scan = diagnostic_scan(*ctx.model, lambda_grid(ctx), diagnostic_options(ctx));
  return ctx.model->lambda_to_control(critical_window(scan).midpoint());
}

double s_c_of(Context& ctx, const char* sec) {
  const json& s = section(ctx.config, sec);
  return resolve_s_c(ctx, s.contains("s_c") ? s["s_c"] : json("auto"));
}

SpectralScan make_scan(Context& ctx) {
  const json& s = section(ctx.config, "scan");
  ScanOptions opt;
  opt.n_levels = get_or<int>(s, "n_levels", 2);
  opt.overlap_threshold = get_or<double>(s, "overlap_threshold", 0.5);
  opt.use_symmetry = get_or<bool>(s, "use_symmetry", true);
  const auto grid = uniform_grid(get_or<double>(s, "s_min", 0.0), get_or<double>(s, "s_max", 1.0),
                                 get_or<int>(s, "points", 201));
  if (ctx.model->kind() == ModelKind::ising) return spectral_scan(*ctx.model, grid, opt);
  // Rydberg: the normalized displacement operator of one gaussian sample.
  const json& e = section(ctx.config, "ensemble");
  const double sigma = get_or<double>(e, "sigma", 0.0);
  if (!(sigma > 0.0)) throw InvalidArgument("Rydberg scans need ensemble.sigma > 0");
  const auto ens = sample_disorder(*ctx.model, sigma, 1, get_or<std::uint64_t>(s, "seed", get_or<std::uint64_t>(e, "seed", 0)));
  const auto& r = *ctx.model->rydberg();
  const auto op = displacement_perturbation(r.positions, ens.displacements[0], r.blockade_radius, sigma, r.omega0,
                                            r.truncation_radius);
  auto diag = std::make_shared<std::vector<double>>(op.diagonal());
  const LinearMap v = [diag](std::span<const cplx> in, std::span<cplx> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = (*diag)[i] * in[i];
  };
  return spectral_scan(*ctx.model, v, grid, opt);
}

OptConfig opt_config(const Context& ctx) {
  const json& o = section(ctx.config, "optimizer");
  OptConfig c;
  c.eta = get_or<double>(o, "eta", c.eta);
  c.mu = get_or<double>(o, "mu", c.mu);
  c.gradient_mode = parse_derivative_mode(get_or<std::string>(o, "gradient_mode", to_string(c.gradient_mode)));
  c.gradient_tolerance = get_or<double>(o, "gradient_tolerance", c.gradient_tolerance);
  c.function_tolerance = get_or<double>(o, "function_tolerance", c.function_tolerance);
  c.max_iterations = get_or<int>(o, "max_iterations", c.max_iterations);
  c.lbfgs_memory = get_or<int>(o, "lbfgs_memory", c.lbfgs_memory);
  c.cost = cost_options(ctx);
  return c;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string t_label(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write '" + path + "'");
    out_ << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    out_.flush();
    if (!out_) throw IoError("error writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

json run_spectrum(Context& ctx) {
  const auto scan = make_scan(ctx);
  scan.write_csv(ctx.path("spectrum.csv"));
  double min_gap = scan.gap(0, 1);
  double s_min_gap = scan.s[0];
  for (std::size_t i = 0; i < scan.s.size(); ++i) {
    if (scan.gap(i, 1) < min_gap) {
      min_gap = scan.gap(i, 1);
      s_min_gap = scan.s[i];
    }
  }
  return {{"points", scan.s.size()},
          {"min_gap", min_gap},
          {"s_at_min_gap", s_min_gap},
          {"v10_first", {scan.v_k0.front()[1].real(), scan.v_k0.front()[1].imag()}},
          {"v10_last", {scan.v_k0.back()[1].real(), scan.v_k0.back()[1].imag()}},
          {"min_tracking_overlap", *std::min_element(scan.min_overlap.begin(), scan.min_overlap.end())}};
}

json run_oracle(Context& ctx) {
  const auto scan = make_scan(ctx);
  const ControlProtocol p = make_protocol(ctx.config.at("protocol"));
  const json& o = section(ctx.config, "oracle");
  OracleOptions opt;
  opt.n_sectors = get_or<int>(o, "n_sectors", 2);
  opt.ordered_only = get_or<bool>(o, "ordered_only", false);
  opt.clip = get_or<bool>(o, "clip", false);
  opt.s_c = s_c_of(ctx, "oracle");
  const double eps = get_or<double>(o, "epsilon", 1e-4);
  json r{{"epsilon", eps}, {"s_c", opt.s_c}, {"oracle_infidelity", firstorder_infidelity(p, scan, eps, opt)}};
  if (ctx.model->kind() == ModelKind::ising) {
    const StateVector target = make_target(ctx);
    const StateVector a = propagate(*ctx.model, p, ctx.model->unperturbed(), ctx.krylov);
    const StateVector b = propagate(*ctx.model, p, ctx.model->with_field(eps), ctx.krylov);
    const double base = 1.0 - fidelity(target, a);
    r["exact_infidelity"] = 1.0 - fidelity(target, b);
    r["exact_unperturbed_infidelity"] = base;
    r["exact_excess_infidelity"] = (1.0 - fidelity(target, b)) - base;
  }
  write_text(ctx.path("oracle.json"), r.dump(2) + "\n");
  return r;
}

json run_landscape(Context& ctx) {
  const json& l = section(ctx.config, "landscape");
  const auto scan = make_scan(ctx);
  LandscapeOptions opt;
  opt.n_grid = get_or<int>(l, "n_grid", 41);
  opt.n_steps = get_or<int>(l, "n_steps", 150);
  opt.s_c = s_c_of(ctx, "landscape");
  opt.cost = cost_options(ctx);
  const auto land = landscape(*ctx.model, l.at("total_time").get<double>(), make_ensemble(ctx), make_target(ctx), scan, opt);
  land.write_csv(ctx.path("landscape.csv"));
  land.write_contours_csv(ctx.path("contours.csv"));
  json inter = json::array();
  double nearest = std::numeric_limits<double>::infinity();
  const double cell = land.axis[1] - land.axis[0];
  for (const auto& p : land.intersections) {
    inter.push_back({p.s_ii, p.s_iii});
    nearest = std::min(nearest, std::max(std::abs(p.s_ii - land.argmin.s_ii), std::abs(p.s_iii - land.argmin.s_iii)) / cell);
  }
  json r{{"argmin", {land.argmin.s_ii, land.argmin.s_iii}},
         {"min_cost", land.min_cost},
         {"intersections", inter},
         {"argmin_to_nearest_intersection_cells", std::isfinite(nearest) ? json(nearest) : json(nullptr)},
         {"s_c", opt.s_c}};
  write_text(ctx.path("landscape.json"), r.dump(2) + "\n");
  return r;
}

json run_optimize(Context& ctx) {
  const json& o = section(ctx.config, "optimizer");
  const std::string method = get_or<std::string>(o, "method", "grape");
  const StateVector target = make_target(ctx);
  const DisorderEnsemble ens = make_ensemble(ctx);
  OptConfig cfg = opt_config(ctx);
  const ControlProtocol initial = make_protocol(ctx.config.at("protocol"));
  const double s_c = s_c_of(ctx, "optimizer");

  if (method == "grape") {
    const auto r = grape(*ctx.model, target, ens, initial, cfg);
    write_text(ctx.path("report.json"), to_json(r));
    write_protocol(ctx.path("protocol.txt"), r.protocol);
    return {{"final_infidelity", r.final_infidelity}, {"final_cost", r.final_cost}, {"iterations", r.iterations},
            {"crossings", count_crossings(r.protocol, s_c)}, {"termination", r.termination}};
  }
  if (method == "goat") {
    const int nc_max = get_or<int>(o, "nc_max", 5);
    const double c1 = get_or<double>(o, "c1_init", 0.0);
    const auto reports = goat_continuation(*ctx.model, ens, target, initial.total_time, nc_max, c1, initial.n_steps(), cfg);
    CsvWriter csv(ctx.path("goat.csv"), "n_c,final_infidelity,crossings");
    json legs = json::array();
    for (std::size_t k = 0; k < reports.size(); ++k) {
      const auto& r = reports[k];
      const std::string tag = std::to_string(k + 1);
      write_text(ctx.path("report_nc" + tag + ".json"), to_json(r));
      write_protocol(ctx.path("protocol_nc" + tag + ".txt"), r.protocol);
      csv.row({tag, fmt(r.final_infidelity), std::to_string(count_crossings(r.protocol, s_c))});
      legs.push_back({{"n_c", k + 1}, {"final_infidelity", r.final_infidelity}});
    }
    return {{"legs", legs}};
  }

  // Continuation in T.
  const json& ts = o.at("t_schedule");
  const auto grid = t_grid(ts.at("start").get<double>(), ts.at("step").get<double>(), ts.at("end").get<double>());
  const std::string dir = get_or<std::string>(ts, "direction", "forward");
  const auto sweep = [&](const DisorderEnsemble& e) {
    auto legs = continuation_T(*ctx.model, target, e, initial, grid,
                               dir == "reverse" ? SweepDirection::reverse : SweepDirection::forward, cfg);
    if (dir == "both") {
      // Reverse pass from the longest forward optimum; keep the better leg.
      const auto& last = legs.back();
      const ControlProtocol seed = last.ok ? last.report.protocol : initial;
      const auto back = continuation_T(*ctx.model, target, e, seed, grid, SweepDirection::reverse, cfg);
      for (auto& leg : legs) {
        for (const auto& b : back) {
          if (b.ok && std::abs(b.total_time - leg.total_time) < 1e-9 &&
              (!leg.ok || b.report.final_cost < leg.report.final_cost)) {
            leg = b;
          }
        }
      }
    }
    std::sort(legs.begin(), legs.end(), [](const auto& a, const auto& b) { return a.total_time < b.total_time; });
    return legs;
  };
  const auto robust = sweep(ens);
  std::vector<ContinuationLeg> reference;
  const bool with_reference = get_or<bool>(o, "reference", false);
  if (with_reference) reference = sweep(sample_disorder(*ctx.model, 0.0, 1, 0));

  json legs = json::array();
  int failed = 0;
  for (const auto& leg : robust) {
    const std::string tag = t_label(leg.total_time);
    if (leg.ok) {
      write_text(ctx.path("report_T" + tag + ".json"), to_json(leg.report));
      write_protocol(ctx.path("protocol_T" + tag + ".txt"), leg.report.protocol);
    } else {
      ++failed;
    }
    legs.push_back({{"total_time", leg.total_time}, {"ok", leg.ok}, {"error", leg.error}});
  }
  for (const auto& leg : reference) {
    if (!leg.ok) continue;
    write_protocol(ctx.path("reference_protocol_T" + t_label(leg.total_time) + ".txt"), leg.report.protocol);
  }
  json r{{"legs", legs}, {"failed_legs", failed}};
  if (with_reference) {
    const double margin = get_or<double>(o, "margin", 0.1);
    const auto cross = find_crossover(*ctx.model, target, ens, robust, reference, margin, cfg.cost);
    CsvWriter csv(ctx.path("cost_vs_T.csv"), "T,cost,reference_cost,crossings");
    for (std::size_t i = 0; i < cross.total_time.size(); ++i) {
      int crossings = 0;
      for (const auto& leg : robust) {
        if (std::abs(leg.total_time - cross.total_time[i]) < 1e-9) crossings = count_crossings(leg.report.protocol, s_c);
      }
      csv.row({fmt(cross.total_time[i]), fmt(cross.robust_cost[i]), fmt(cross.reference_cost[i]), std::to_string(crossings)});
    }
    r["t_star"] = cross.t_star ? json(*cross.t_star) : json(nullptr);
    r["margin"] = margin;
  } else {
    CsvWriter csv(ctx.path("cost_vs_T.csv"), "T,cost,crossings");
    for (const auto& leg : robust) {
      if (leg.ok) csv.row({fmt(leg.total_time), fmt(leg.report.final_infidelity), std::to_string(count_crossings(leg.report.protocol, s_c))});
    }
  }
  write_text(ctx.path("continuation.json"), r.dump(2) + "\n");
  if (failed == static_cast<int>(robust.size())) throw NumericalError("every continuation leg failed");
  return r;
}

json run_evaluate(Context& ctx) {
  const json& e = ctx.config.at("evaluate");
  const ControlProtocol p = make_protocol(ctx.config.at("protocol"));
  const StateVector target = make_target(ctx);
  const auto grid = uniform_grid(e.at("min").get<double>(), e.at("max").get<double>(), e.at("points").get<int>());
  json r;
  r["ensemble_cost"] = cost(*ctx.model, p, make_ensemble(ctx), target, cost_options(ctx));
  if (e.at("parameter").get<std::string>() == "field") {
    std::unique_ptr<Model> swapped;
    const Model* m = ctx.model.get();
    if (e.contains("perturbation")) {
      IsingParams ip = *ctx.model->ising();
      ip.perturbation = parse_ising_perturbation(e["perturbation"].get<std::string>());
      swapped = std::make_unique<Model>(ip);
      m = swapped.get();
    }
    std::vector<double> vals(grid.size());
    parallel_for(grid.size(), 0, [&](std::size_t i, int) {
      vals[i] = 1.0 - fidelity(target, propagate(*m, p, m->with_field(grid[i]), ctx.krylov));
    });
    CsvWriter csv(ctx.path("evaluate.csv"), "h,infidelity");
    for (std::size_t i = 0; i < grid.size(); ++i) csv.row({fmt(grid[i]), fmt(vals[i])});
    r["perturbation"] = to_string(m->ising()->perturbation);
  } else {
    const json& en = section(ctx.config, "ensemble");
    CsvWriter csv(ctx.path("evaluate.csv"), "sigma,mean_infidelity");
    for (double sigma : grid) {
      const auto ens = sample_disorder(*ctx.model, sigma, get_or<int>(en, "n_samples", 1), get_or<std::uint64_t>(en, "seed", 0));
      csv.row({fmt(sigma), fmt(cost(*ctx.model, p, ens, target, cost_options(ctx)))});
    }
  }
  write_text(ctx.path("evaluate.json"), r.dump(2) + "\n");
  return r;
}

json run_echo(Context& ctx) {
  const ControlProtocol p = make_protocol(ctx.config.at("protocol"));
  const auto scan = make_scan(ctx);
  const json& e = section(ctx.config, "echo");
  const double s_c = s_c_of(ctx, "echo");
  const auto r = echo_conditions(p, scan, s_c, get_or<double>(e, "epsilon", 1.0), true);
  const std::string text = to_json(r);
  write_text(ctx.path("echo.json"), text);
  return json::parse(text);
}

json run_noise(Context& ctx) {
  const json& n = ctx.config.at("noise");
  std::vector<NamedProtocol> protocols;
  for (const auto& item : n.at("protocols")) {
    protocols.push_back({item.at("id").get<std::string>(), read_protocol(item.at("path").get<std::string>())});
  }
  const double t_ref = protocols.front().protocol.total_time;
  std::vector<double> tau;
  for (double ratio : n.at("tau_c_over_T").get<std::vector<double>>()) tau.push_back(ratio * t_ref);
  NoiseBenchmarkOptions opt;
  opt.n_realizations = get_or<int>(n, "n_realizations", 500);
  opt.sigma = get_or<double>(n, "sigma", 0.003);
  opt.master_seed = get_or<std::uint64_t>(n, "seed", 0);
  opt.static_quadrature_nodes = get_or<int>(n, "quadrature_nodes", opt.static_quadrature_nodes);
  opt.krylov = ctx.krylov;
  const auto b = noise_benchmark(*ctx.model, make_target(ctx), protocols, tau, opt);
  b.write_csv(ctx.path("noise.csv"));
  const std::string text = to_json(b);
  write_text(ctx.path("noise.json"), text);
  json r = json::parse(text);
  r["reference_total_time"] = t_ref;
  return r;
}

json run_diagnose(Context& ctx) {
  const json& d = section(ctx.config, "diagnose");
  const auto scan = diagnostic_scan(*ctx.model, lambda_grid(ctx), diagnostic_options(ctx));
  scan.write_csv(ctx.path("diagnostics.csv"));
  json r;
  const auto w = critical_window(scan);
  write_text(ctx.path("window.json"), to_json(w));
  r["window"] = json::parse(to_json(w));
  r["s_c"] = ctx.model->lambda_to_control(w.midpoint());
  if (d.contains("scaling_data")) {
    std::ifstream in(d["scaling_data"].get<std::string>());
    if (!in) throw IoError("cannot read scaling data");
    std::vector<ScalingPoint> pts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#' || line.rfind("h,", 0) == 0) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      ScalingPoint p;
      if (!(row >> p.h >> p.n_sites >> p.infidelity)) {
        throw InvalidArgument("scaling data line " + std::to_string(line_no) + ": expected 'h,L,infidelity'");
      }
      pts.push_back(p);
    }
    const auto fit = scaling_fit(pts);
    write_text(ctx.path("scaling.json"), to_json(fit));
    r["scaling"] = json::parse(to_json(fit));
  }
  return r;
}

}  // namespace

Model model_from_json(const std::string& model_json) {
  json m;
  try {
    m = json::parse(model_json);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model is not valid JSON: ") + e.what());
  }
  std::vector<ConfigViolation> out;
  check_node(m, schema()["model"], "model", out);
  if (out.empty()) semantic_checks("model", json{{"model", m}}, out);
  if (!out.empty()) throw InvalidArgument(out.front().path + ": " + out.front().message);
  return std::move(*make_model(m));
}

StateVector target_from_name(const Model& model, const std::string& name) {
  if (name == "auto") {
    return build_target(model.kind() == ModelKind::ising ? TargetKind::ising_ghz_plus : TargetKind::rydberg_ghz_plus,
                        model);
  }
  return build_target(parse_target_kind(name), model);
}

std::string run_subcommand(const std::string& subcommand, const std::string& config_json,
                           const std::string& output_dir) {
  const auto violations = validate_config(subcommand, config_json);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += " [" + (v.path.empty() ? std::string("<config>") : v.path) + ": " + v.message + "]";
    throw InvalidArgument(msg);
  }
  Context ctx;
  ctx.config = json::parse(config_json);
  ctx.out_dir = output_dir.empty() ? fs::path(".") : fs::path(output_dir);
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + ctx.out_dir.string() + "': " + ec.message());
  if (ctx.config.contains("jobs")) set_default_jobs(ctx.config["jobs"].get<int>());
  const json& k = section(ctx.config, "krylov");
  ctx.krylov.tol = get_or<double>(k, "tol", ctx.krylov.tol);
  ctx.krylov.max_dim = get_or<int>(k, "max_dim", ctx.krylov.max_dim);
  ctx.krylov.max_splits = get_or<int>(k, "max_splits", ctx.krylov.max_splits);
  ctx.model = make_model(ctx.config.at("model"));

  json result;
  try {
    if (subcommand == "spectrum") result = run_spectrum(ctx);
    else if (subcommand == "oracle") result = run_oracle(ctx);
    else if (subcommand == "landscape") result = run_landscape(ctx);
    else if (subcommand == "optimize") result = run_optimize(ctx);
    else if (subcommand == "evaluate") result = run_evaluate(ctx);
    else if (subcommand == "echo-check") result = run_echo(ctx);
    else if (subcommand == "noise-bench") result = run_noise(ctx);
    else result = run_diagnose(ctx);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("configuration: ") + e.what());
  }
  json out{{"subcommand", subcommand}, {"status", "ok"}, {"result", result}, {"artifacts", ctx.artifacts}};
  return out.dump(2) + "\n";
}

}  // namespace echoprep
