#include "echoprep/echoprep.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "echoprep/error.hpp"
#include "echoprep/optimizer.hpp"
#include "echoprep/parallel.hpp"
#include "echoprep/propagator.hpp"
#include "echoprep/run.hpp"
#include "json.hpp"

struct echoprep_model {
  echoprep::Model model;
};
struct echoprep_protocol {
  echoprep::ControlProtocol protocol;
};
struct echoprep_ensemble {
  echoprep::DisorderEnsemble ensemble;
  // The model the ensemble was drawn for; cost calls must use the same one.
  int n_sites = 0;
};
struct echoprep_state {
  echoprep::StateVector state;
};

namespace {

thread_local std::string last_error;

int fail(int status, const std::string& message) {
  last_error = message;
  return status;
}

// Maps exceptions to status codes; f returns nothing and reports via out params.
template <class F>
int guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return ECHOPREP_OK;
  } catch (const echoprep::InvalidArgument& e) {
    return fail(ECHOPREP_INVALID_ARGUMENT, e.what());
  } catch (const echoprep::NumericalError& e) {
    return fail(ECHOPREP_NUMERICAL_ERROR, e.what());
  } catch (const echoprep::IoError& e) {
    return fail(ECHOPREP_IO_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ECHOPREP_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(ECHOPREP_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(ECHOPREP_INTERNAL_ERROR, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw echoprep::InvalidArgument(what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check_ensemble(const echoprep_model* m, const echoprep_ensemble* e) {
  require(e->n_sites == m->model.n_sites(), "ensemble was sampled for a different model");
}

}  // namespace

extern "C" {

const char* echoprep_version(void) { return "0.1.0"; }

const char* echoprep_last_error(void) { return last_error.c_str(); }

void echoprep_string_free(char* s) { std::free(s); }

int echoprep_set_jobs(int jobs) {
  return guarded([&] {
    require(jobs >= 0, "jobs must be >= 0");
    echoprep::set_default_jobs(jobs);
  });
}

int echoprep_model_ising(int n_sites, double j0, const char* perturbation, echoprep_model** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    echoprep::IsingParams p;
    p.n_sites = n_sites;
    p.j0 = j0;
    if (perturbation) p.perturbation = echoprep::parse_ising_perturbation(perturbation);
    *out = new echoprep_model{echoprep::Model(p)};
  });
}

int echoprep_model_from_json(const char* model_json, echoprep_model** out) {
  return guarded([&] {
    require(model_json != nullptr && out != nullptr, "null argument");
    *out = new echoprep_model{echoprep::model_from_json(model_json)};
  });
}

void echoprep_model_free(echoprep_model* model) { delete model; }

int echoprep_model_n_sites(const echoprep_model* model, int* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = model->model.n_sites();
  });
}

int echoprep_protocol_linear(double total_time, int n_steps, echoprep_protocol** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    auto p = echoprep::ControlProtocol::linear(total_time, n_steps);
    p.validate();
    *out = new echoprep_protocol{std::move(p)};
  });
}

int echoprep_protocol_from_values(double total_time, const double* values, int n_steps, echoprep_protocol** out) {
  return guarded([&] {
    require(out != nullptr && (values != nullptr || n_steps == 0), "null argument");
    echoprep::ControlProtocol p;
    p.total_time = total_time;
    p.values.assign(values, values + std::max(n_steps, 0));
    p.validate();
    *out = new echoprep_protocol{std::move(p)};
  });
}

int echoprep_protocol_read(const char* path, echoprep_protocol** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new echoprep_protocol{echoprep::read_protocol(path)};
  });
}

int echoprep_protocol_write(const echoprep_protocol* protocol, const char* path) {
  return guarded([&] {
    require(protocol && path, "null argument");
    echoprep::write_protocol(path, protocol->protocol);
  });
}

void echoprep_protocol_free(echoprep_protocol* protocol) { delete protocol; }

int echoprep_protocol_n_steps(const echoprep_protocol* protocol, int* out) {
  return guarded([&] {
    require(protocol && out, "null argument");
    *out = protocol->protocol.n_steps();
  });
}

int echoprep_protocol_total_time(const echoprep_protocol* protocol, double* out) {
  return guarded([&] {
    require(protocol && out, "null argument");
    *out = protocol->protocol.total_time;
  });
}

int echoprep_protocol_values(const echoprep_protocol* protocol, double* values, int capacity) {
  return guarded([&] {
    require(protocol && (values || capacity == 0), "null argument");
    const int n = std::min(capacity, protocol->protocol.n_steps());
    for (int i = 0; i < n; ++i) values[i] = protocol->protocol.values[i];
  });
}

int echoprep_ensemble_sample(const echoprep_model* model, double sigma, int n_samples, uint64_t seed,
                             echoprep_ensemble** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = new echoprep_ensemble{echoprep::sample_disorder(model->model, sigma, n_samples, seed), model->model.n_sites()};
  });
}

void echoprep_ensemble_free(echoprep_ensemble* ensemble) { delete ensemble; }

int echoprep_ensemble_size(const echoprep_ensemble* ensemble, int* out) {
  return guarded([&] {
    require(ensemble && out, "null argument");
    *out = static_cast<int>(ensemble->ensemble.size());
  });
}

int echoprep_state_target(const echoprep_model* model, const char* target, echoprep_state** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = new echoprep_state{echoprep::target_from_name(model->model, target ? target : "auto")};
  });
}

int echoprep_state_propagate(const echoprep_model* model, const echoprep_protocol* protocol, double epsilon,
                             echoprep_state** out) {
  return guarded([&] {
    require(model && protocol && out, "null argument");
    require(epsilon == 0.0 || model->model.kind() == echoprep::ModelKind::ising,
            "a nonzero epsilon needs an Ising model");
    const auto pert = epsilon == 0.0 ? model->model.unperturbed() : model->model.with_field(epsilon);
    *out = new echoprep_state{echoprep::propagate(model->model, protocol->protocol, pert)};
  });
}

void echoprep_state_free(echoprep_state* state) { delete state; }

int echoprep_state_dim(const echoprep_state* state, size_t* out) {
  return guarded([&] {
    require(state && out, "null argument");
    *out = state->state.dim();
  });
}

int echoprep_state_fidelity(const echoprep_state* a, const echoprep_state* b, double* out) {
  return guarded([&] {
    require(a && b && out, "null argument");
    *out = echoprep::fidelity(a->state, b->state);
  });
}

int echoprep_cost(const echoprep_model* model, const echoprep_protocol* protocol, const echoprep_ensemble* ensemble,
                  const echoprep_state* target, double* out) {
  return guarded([&] {
    require(model && protocol && ensemble && target && out, "null argument");
    check_ensemble(model, ensemble);
    *out = echoprep::cost(model->model, protocol->protocol, ensemble->ensemble, target->state);
  });
}

int echoprep_cost_gradient(const echoprep_model* model, const echoprep_protocol* protocol,
                           const echoprep_ensemble* ensemble, const echoprep_state* target, const char* mode,
                           double* cost, double* gradient, int n_steps) {
  return guarded([&] {
    require(model && protocol && ensemble && target && cost && gradient, "null argument");
    require(n_steps == protocol->protocol.n_steps(), "gradient buffer size must equal the protocol's n_steps");
    check_ensemble(model, ensemble);
    const auto m = echoprep::parse_derivative_mode(mode ? mode : "first_order");
    const auto r = echoprep::cost_gradient(model->model, protocol->protocol, ensemble->ensemble, target->state, m);
    *cost = r.cost;
    for (int i = 0; i < n_steps; ++i) gradient[i] = r.gradient[i];
  });
}

int echoprep_validate_config(const char* subcommand, const char* config_json, char** violations_json) {
  return guarded([&] {
    require(subcommand && config_json && violations_json, "null argument");
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : echoprep::validate_config(subcommand, config_json)) {
      a.push_back({{"path", v.path}, {"message", v.message}});
    }
    *violations_json = copy_string(a.dump());
  });
}

int echoprep_config_set(const char* config_json, const char* dotted_key, const char* value, char** out_json) {
  return guarded([&] {
    require(config_json && dotted_key && value && out_json, "null argument");
    *out_json = copy_string(echoprep::set_config_value(config_json, dotted_key, value));
  });
}

int echoprep_run(const char* subcommand, const char* config_json, const char* output_dir, char** summary_json) {
  return guarded([&] {
    require(subcommand && config_json && summary_json, "null argument");
    *summary_json = copy_string(echoprep::run_subcommand(subcommand, config_json, output_dir ? output_dir : ""));
  });
}

}  // extern "C"
