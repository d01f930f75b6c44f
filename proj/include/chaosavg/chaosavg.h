#ifndef CHAOSAVG_H
#define CHAOSAVG_H

/* C interface of the chaosavg shared library. Every call returns a status
 * code; the message of the most recent failure on a context is available
 * through chaosavg_last_error. Strings handed out by the library are
 * released with chaosavg_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define CHAOSAVG_API __attribute__((visibility("default")))
#else
#define CHAOSAVG_API
#endif

typedef enum chaosavg_status {
  CHAOSAVG_OK = 0,
  CHAOSAVG_INVALID_ARGUMENT = 1,
  CHAOSAVG_INVALID_CONFIG = 2,
  CHAOSAVG_INVALID_INPUT = 3,
  CHAOSAVG_NUMERICAL_FAILURE = 4,
  CHAOSAVG_INSUFFICIENT_DATA = 5,
  CHAOSAVG_SAMPLER_FAILURE = 6,
  CHAOSAVG_IO_ERROR = 7,
  CHAOSAVG_EMPTY_ENSEMBLE = 8,
  CHAOSAVG_INTERNAL_ERROR = 99
} chaosavg_status;

typedef struct chaosavg_context chaosavg_context;
typedef struct chaosavg_model chaosavg_model;

CHAOSAVG_API const char* chaosavg_version(void);
CHAOSAVG_API const char* chaosavg_status_name(chaosavg_status status);

CHAOSAVG_API chaosavg_status chaosavg_context_create(chaosavg_context** out);
CHAOSAVG_API void chaosavg_context_destroy(chaosavg_context* ctx);
/* Message of the last failure on this context; empty when none. */
CHAOSAVG_API const char* chaosavg_last_error(const chaosavg_context* ctx);
/* Worker threads for the inner parallel loops; 0 selects the default. */
CHAOSAVG_API chaosavg_status chaosavg_set_threads(chaosavg_context* ctx, int threads);

CHAOSAVG_API void chaosavg_string_free(char* s);

/* Runs a command ("special-check", "bm", "she", "tail-bound", "report") on a
 * JSON config. When has_seed is nonzero, seed replaces the config's
 * master_seed. Outputs go to out_dir (NULL means "out"). On CHAOSAVG_OK,
 * *verdict_json receives the verdict document and *passed is 1 when every
 * check passed, 0 otherwise. */
CHAOSAVG_API chaosavg_status chaosavg_run(chaosavg_context* ctx, const char* command, const char* config_json,
                                          int has_seed, uint64_t seed, const char* out_dir, char** verdict_json,
                                          int* passed);

/* Default config of a command as JSON text. */
CHAOSAVG_API chaosavg_status chaosavg_default_config(chaosavg_context* ctx, const char* command, char** config_json);

/* Covariance models by catalog id, e.g. "gaussian:scale=1", "riesz:beta=0.5". */
CHAOSAVG_API chaosavg_status chaosavg_model_create(chaosavg_context* ctx, const char* id, int dim,
                                                   chaosavg_model** out);
CHAOSAVG_API void chaosavg_model_destroy(chaosavg_model* model);
CHAOSAVG_API int chaosavg_model_dim(const chaosavg_model* model);
/* x and xi point to dim coordinates. */
CHAOSAVG_API chaosavg_status chaosavg_model_gamma(chaosavg_context* ctx, const chaosavg_model* model,
                                                  const double* x, double* out);
CHAOSAVG_API chaosavg_status chaosavg_model_phi(chaosavg_context* ctx, const chaosavg_model* model,
                                                const double* xi, double* out);

/* Special functions. */
CHAOSAVG_API chaosavg_status chaosavg_bessel_j(chaosavg_context* ctx, double order, double x, double* out);
CHAOSAVG_API chaosavg_status chaosavg_ball_volume(chaosavg_context* ctx, int dim, double* out);
CHAOSAVG_API chaosavg_status chaosavg_ell_r(chaosavg_context* ctx, int dim, double R, double r, double* out);

/* Limit variance of a Hermite series functional of a model's field:
 * orders[i] and coeffs[i] for i < n. */
CHAOSAVG_API chaosavg_status chaosavg_limit_variance(chaosavg_context* ctx, const chaosavg_model* model,
                                                     const int* orders, const double* coeffs, size_t n,
                                                     double* out);

#ifdef __cplusplus
}
#endif

#endif
