#ifndef GLAM_GLAM_H
#define GLAM_GLAM_H

/* C interface of the GLaM / MF-GLaM stochastic emulator library.
 *
 * Every function returns a glam_status. On failure the message of the last
 * error on the calling thread is available from glam_last_error(). Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with glam_string_free(). Handles are released with their _free
 * function; passing NULL to any _free function is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define GLAM_API __declspec(dllexport)
#else
#  define GLAM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glam_status {
  GLAM_OK = 0,
  GLAM_ERR_USAGE = 1,    /* invalid argument or configuration */
  GLAM_ERR_FIT = 2,      /* fitting produced no feasible model */
  GLAM_ERR_DOMAIN = 3,   /* value outside a mathematical domain, metric undefined */
  GLAM_ERR_IO = 4,       /* file or parse error */
  GLAM_ERR_SCHEMA = 5,   /* malformed model document */
  GLAM_ERR_INTERNAL = 6
} glam_status;

typedef struct glam_config glam_config;
typedef struct glam_dataset glam_dataset;
typedef struct glam_model glam_model;

GLAM_API const char* glam_version(void);
GLAM_API const char* glam_last_error(void);
GLAM_API void glam_string_free(char* s);

/* Configuration: flat "key = value" text. */
GLAM_API glam_status glam_config_load(const char* path, glam_config** out);
GLAM_API glam_status glam_config_parse(const char* text, glam_config** out);
GLAM_API glam_status glam_config_set(glam_config* cfg, const char* key, const char* value);
GLAM_API void glam_config_free(glam_config* cfg);
/* Every recognized key with its default value. */
GLAM_API glam_status glam_defaults(char** out_text);

/* Datasets: CSV with a header row; input columns named as in the config's
 * marginals plus a response column "y". With low_fidelity != 0 only the
 * config's lf_columns are read. */
GLAM_API glam_status glam_dataset_load(const char* csv_path, const glam_config* cfg, int low_fidelity,
                                       glam_dataset** out);
GLAM_API size_t glam_dataset_rows(const glam_dataset* d);
GLAM_API void glam_dataset_free(glam_dataset* d);

/* Fitting. report_json may be NULL. */
GLAM_API glam_status glam_fit_glam(const glam_dataset* data, const glam_config* cfg, glam_model** out,
                                   char** report_json);
GLAM_API glam_status glam_fit_mfglam(const glam_dataset* hf, const glam_dataset* lf, const glam_config* cfg,
                                     glam_model** out, char** report_json);

/* Model documents (JSON). */
GLAM_API glam_status glam_model_load(const char* path, glam_model** out);
GLAM_API glam_status glam_model_save(const glam_model* m, const char* path);
GLAM_API glam_status glam_model_to_json(const glam_model* m, char** out_json);
GLAM_API size_t glam_model_input_dim(const glam_model* m);
GLAM_API void glam_model_free(glam_model* m);

/* Predictions at n points stored row-major (n x input_dim), physical units. */
GLAM_API glam_status glam_predict_lambda(const glam_model* m, const double* x, size_t n, double* out_lambda);
GLAM_API glam_status glam_predict_quantiles(const glam_model* m, const double* x, size_t n, const double* levels,
                                            size_t n_levels, double* out);
GLAM_API glam_status glam_predict_pdf(const glam_model* m, const double* x, size_t n, const double* ys,
                                      size_t n_ys, double* out);
/* NaN where the moments are undefined. */
GLAM_API glam_status glam_predict_moments(const glam_model* m, const double* x, size_t n, double* out_mean,
                                          double* out_variance);
/* File-level prediction. mode: "quantiles" (values = levels), "pdf"
 * (values = response grid) or "moments" (values ignored). */
GLAM_API glam_status glam_predict_file(const glam_model* m, const char* points_csv, const char* mode,
                                       const double* values, size_t n_values, const char* out_csv);

/* Built-in simulators. example: "synthetic" | "borehole"; fidelity: "hf" |
 * "lf". Writes an LHS design of n points with one response each. */
GLAM_API glam_status glam_simulate(const char* example, const char* fidelity, size_t n, uint64_t seed,
                                   const char* out_csv);

/* Normalized Wasserstein error against a reference described by cfg:
 * reference = synthetic | borehole | model, reference_model = <path>,
 * test_points, replications, seed. */
GLAM_API glam_status glam_validate(const glam_model* m, const glam_config* cfg, char** metrics_json);

/* Runs an experiment plan; writes summary.json and rows.csv into out_dir. */
GLAM_API glam_status glam_experiment(const glam_config* cfg, const char* out_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* GLAM_GLAM_H */
