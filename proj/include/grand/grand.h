/* C interface to the grand packing-system toolkit.
 *
 * All functions return a grand_status; on failure grand_last_error() holds a
 * message for the calling thread until its next call into the library.
 * Strings returned through char** are owned by the caller and released with
 * grand_string_free. Handles are released with their *_free function; passing
 * NULL to a *_free function is a no-op. */
#ifndef GRAND_GRAND_H
#define GRAND_GRAND_H

#include <stddef.h>
#include <stdint.h>

#if defined(GRAND_BUILDING_LIBRARY)
#define GRAND_API __attribute__((visibility("default")))
#else
#define GRAND_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum grand_status {
  GRAND_OK = 0,
  GRAND_E_INVALID_ARGUMENT = 1,
  GRAND_E_PARSE = 2,
  GRAND_E_MODEL = 3,
  GRAND_E_UNBOUNDED_SET = 4,
  GRAND_E_INFEASIBLE = 5,
  GRAND_E_NO_CONVERGENCE = 6,
  GRAND_E_DEGENERATE_AVAILABILITY = 7,
  GRAND_E_DOMAIN = 8,
  GRAND_E_STEP_SIZE = 9,
  GRAND_E_INSUFFICIENT_DATA = 10,
  GRAND_E_IO = 11,
  GRAND_E_ACCEPTANCE_FAILED = 12,
  GRAND_E_INTERNAL = 13
} grand_status;

typedef struct grand_model grand_model;
typedef struct grand_run grand_run;
typedef struct grand_trajectory grand_trajectory;

GRAND_API const char* grand_version(void);
GRAND_API const char* grand_last_error(void);
GRAND_API const char* grand_status_string(grand_status status);
GRAND_API void grand_string_free(char* s);

/* Models. */
GRAND_API grand_status grand_model_load(const char* path, grand_model** out);
GRAND_API grand_status grand_model_parse(const char* text, grand_model** out);
/* One of the built-in acceptance models, e.g. "cap3". */
GRAND_API grand_status grand_model_builtin(const char* name, grand_model** out);
GRAND_API void grand_model_free(grand_model* model);
GRAND_API size_t grand_model_num_types(const grand_model* model);
GRAND_API size_t grand_model_num_server_types(const grand_model* model);
/* Number of nonzero configurations |K|. */
GRAND_API size_t grand_model_num_configs(const grand_model* model);
GRAND_API grand_status grand_model_config_label(const grand_model* model, size_t index, char** out);
/* Human-readable description: configurations, edges, normalization. */
GRAND_API grand_status grand_model_summary(const grand_model* model, char** out);

/* Simulation. */
typedef struct grand_run_options {
  const char* policy; /* "grand-az" | "grand-zp" | "grand-f" */
  double r;
  double horizon;
  double warmup; /* negative selects 20% of horizon */
  uint64_t seed;
  int batches;
} grand_run_options;

GRAND_API void grand_run_options_init(grand_run_options* options);
GRAND_API grand_status grand_simulate(const grand_model* model, const grand_run_options* options,
                                      grand_run** out);
GRAND_API void grand_run_free(grand_run* run);
GRAND_API uint64_t grand_run_events(const grand_run* run);
/* Copy |K| (x), I (y, blocking) values; `n` must match. */
GRAND_API grand_status grand_run_x_mean(const grand_run* run, double* out, size_t n);
GRAND_API grand_status grand_run_y_mean(const grand_run* run, double* out, size_t n);
GRAND_API grand_status grand_run_blocking(const grand_run* run, double* out, size_t n);
GRAND_API double grand_run_pull_rate(const grand_run* run);
GRAND_API grand_status grand_run_csv(const grand_run* run, char** out);

/* Fluid dynamics. */
typedef struct grand_fluid_options {
  const char* mode; /* "inf" | "fin" */
  const char* x0;   /* CSV path | "equilibrium" | "perturbed:<eps>:<seed>" */
  double t_end;
  double dt;
  size_t sample_every;
} grand_fluid_options;

GRAND_API void grand_fluid_options_init(grand_fluid_options* options);
GRAND_API grand_status grand_fluid_integrate(const grand_model* model,
                                             const grand_fluid_options* options,
                                             grand_trajectory** out);
GRAND_API void grand_trajectory_free(grand_trajectory* trajectory);
GRAND_API size_t grand_trajectory_size(const grand_trajectory* trajectory);
/* Final state over K; `n` must equal |K|. */
GRAND_API grand_status grand_trajectory_final(const grand_trajectory* trajectory, double* out,
                                              size_t n);
GRAND_API grand_status grand_trajectory_csv(const grand_trajectory* trajectory, char** out);

/* Optimization: what = product-inf | product-fin | lp | lp-inequality |
 * feasibility | alpha-sweep. `alphas` is only read by alpha-sweep. */
GRAND_API grand_status grand_solve_csv(const grand_model* model, const char* what,
                                       const double* alphas, size_t num_alphas, int threads,
                                       char** out);

/* Studies: kind = t1 | c1 | c2. */
typedef struct grand_study_options {
  const char* kind;
  const char* model_file; /* recorded in the CSV header */
  const double* r_values;
  size_t num_r;
  const uint64_t* seeds;
  size_t num_seeds;
  double horizon;
  double warmup; /* negative selects 20% of horizon */
  int batches;
  int threads;
} grand_study_options;

GRAND_API void grand_study_options_init(grand_study_options* options);
GRAND_API grand_status grand_study_csv(const grand_model* model, const grand_study_options* options,
                                       char** out);

/* Acceptance suites. Returns GRAND_E_ACCEPTANCE_FAILED when any criterion
 * fails; the reports are produced in either case. json and output_dir may be
 * NULL. */
GRAND_API grand_status grand_accept(const char* suite, int threads, const char* output_dir,
                                    char** text, char** json);

#ifdef __cplusplus
}
#endif

#endif /* GRAND_GRAND_H */
