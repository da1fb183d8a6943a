#ifndef ECHOPREP_ECHOPREP_H
#define ECHOPREP_ECHOPREP_H

/* C interface to the echoprep library.
 *
 * Objects are opaque handles released by the matching *_free function; every
 * *_free accepts NULL. Functions return ECHOPREP_OK or a negative status; the
 * message of the most recent failure on the calling thread is available from
 * echoprep_last_error(). Strings returned through char** are heap allocated
 * and released with echoprep_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(ECHOPREP_BUILDING_LIBRARY)
#define ECHOPREP_API __attribute__((visibility("default")))
#else
#define ECHOPREP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum echoprep_status {
  ECHOPREP_OK = 0,
  ECHOPREP_INVALID_ARGUMENT = -1,
  ECHOPREP_NUMERICAL_ERROR = -2,
  ECHOPREP_IO_ERROR = -3,
  ECHOPREP_INTERNAL_ERROR = -4
} echoprep_status;

typedef struct echoprep_model echoprep_model;
typedef struct echoprep_protocol echoprep_protocol;
typedef struct echoprep_ensemble echoprep_ensemble;
typedef struct echoprep_state echoprep_state;

ECHOPREP_API const char* echoprep_version(void);
/* Empty string when no error has occurred on this thread. */
ECHOPREP_API const char* echoprep_last_error(void);
ECHOPREP_API void echoprep_string_free(char* s);
/* 0 selects the hardware concurrency. */
ECHOPREP_API int echoprep_set_jobs(int jobs);

/* --- models --- */

/* perturbation: "Z", "ZZZ", "X" or "XX". */
ECHOPREP_API int echoprep_model_ising(int n_sites, double j0, const char* perturbation, echoprep_model** out);
/* Model from the JSON "model" block used by the command line tool. */
ECHOPREP_API int echoprep_model_from_json(const char* model_json, echoprep_model** out);
ECHOPREP_API void echoprep_model_free(echoprep_model* model);
ECHOPREP_API int echoprep_model_n_sites(const echoprep_model* model, int* out);

/* --- protocols --- */

ECHOPREP_API int echoprep_protocol_linear(double total_time, int n_steps, echoprep_protocol** out);
ECHOPREP_API int echoprep_protocol_from_values(double total_time, const double* values, int n_steps,
                                               echoprep_protocol** out);
ECHOPREP_API int echoprep_protocol_read(const char* path, echoprep_protocol** out);
ECHOPREP_API int echoprep_protocol_write(const echoprep_protocol* protocol, const char* path);
ECHOPREP_API void echoprep_protocol_free(echoprep_protocol* protocol);
ECHOPREP_API int echoprep_protocol_n_steps(const echoprep_protocol* protocol, int* out);
ECHOPREP_API int echoprep_protocol_total_time(const echoprep_protocol* protocol, double* out);
/* Copies min(capacity, n_steps) values. */
ECHOPREP_API int echoprep_protocol_values(const echoprep_protocol* protocol, double* values, int capacity);

/* --- disorder ensembles --- */

ECHOPREP_API int echoprep_ensemble_sample(const echoprep_model* model, double sigma, int n_samples, uint64_t seed,
                                          echoprep_ensemble** out);
ECHOPREP_API void echoprep_ensemble_free(echoprep_ensemble* ensemble);
ECHOPREP_API int echoprep_ensemble_size(const echoprep_ensemble* ensemble, int* out);

/* --- states --- */

/* target: "auto" (the model's default cat state) or a target kind name. */
ECHOPREP_API int echoprep_state_target(const echoprep_model* model, const char* target, echoprep_state** out);
/* Final state for perturbation strength epsilon (Ising). */
ECHOPREP_API int echoprep_state_propagate(const echoprep_model* model, const echoprep_protocol* protocol,
                                          double epsilon, echoprep_state** out);
ECHOPREP_API void echoprep_state_free(echoprep_state* state);
ECHOPREP_API int echoprep_state_dim(const echoprep_state* state, size_t* out);
ECHOPREP_API int echoprep_state_fidelity(const echoprep_state* a, const echoprep_state* b, double* out);

/* --- cost --- */

ECHOPREP_API int echoprep_cost(const echoprep_model* model, const echoprep_protocol* protocol,
                               const echoprep_ensemble* ensemble, const echoprep_state* target, double* out);
/* gradient must hold n_steps values. mode: "first_order" or "exact_frechet". */
ECHOPREP_API int echoprep_cost_gradient(const echoprep_model* model, const echoprep_protocol* protocol,
                                        const echoprep_ensemble* ensemble, const echoprep_state* target,
                                        const char* mode, double* cost, double* gradient, int n_steps);

/* --- configuration driven runs --- */

/* Writes a JSON array of {"path", "message"} violations (empty when valid). */
ECHOPREP_API int echoprep_validate_config(const char* subcommand, const char* config_json, char** violations_json);
/* Applies a dotted-key override; value is parsed as JSON, falling back to a string. */
ECHOPREP_API int echoprep_config_set(const char* config_json, const char* dotted_key, const char* value,
                                     char** out_json);
/* Runs a subcommand and writes its JSON summary. */
ECHOPREP_API int echoprep_run(const char* subcommand, const char* config_json, const char* output_dir,
                              char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
