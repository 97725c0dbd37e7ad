/* fairfpr — C API for the FPR-penalty metric-learning toolkit.
 *
 * All functions return ff_status; FF_OK is 0 and error codes match the CLI
 * exit codes. On failure, ff_last_error() returns a thread-local message.
 * Objects returned through out-parameters are owned by the caller and must
 * be released with the matching *_free function.
 */
#ifndef FAIRFPR_H
#define FAIRFPR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FF_API __declspec(dllexport)
#else
#define FF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ff_status {
  FF_OK = 0,
  FF_ERROR = 1,            /* unexpected internal failure */
  FF_ERR_CONFIG = 2,       /* bad config, flags, or file contents */
  FF_ERR_DIVERGED = 3,     /* training loss turned non-finite */
  FF_ERR_INCOMPATIBLE = 4, /* inputs that do not fit together */
  FF_ERR_PARTIAL = 5       /* sweep completed with failed children */
} ff_status;

typedef struct ff_dataset ff_dataset; /* opaque */
typedef struct ff_model ff_model;     /* opaque: encoder + classifier weights */

FF_API const char* ff_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
FF_API const char* ff_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* spec_json is the generate-config JSON text (not a path). */
FF_API ff_status ff_dataset_generate(const char* spec_json, ff_dataset** out);
FF_API ff_status ff_dataset_load(const char* path_base, ff_dataset** out);
FF_API ff_status ff_dataset_save(const ff_dataset* d, const char* path_base);
FF_API ff_status ff_dataset_split(const ff_dataset* d, size_t holdout_identities_per_group,
                                  uint64_t seed, ff_dataset** train_out, ff_dataset** eval_out);
FF_API size_t ff_dataset_rows(const ff_dataset* d);
FF_API size_t ff_dataset_classes(const ff_dataset* d);
FF_API void ff_dataset_free(ff_dataset* d);

/* ---- models ------------------------------------------------------------ */

/* config_json is the train-config JSON text. Trains in memory. */
FF_API ff_status ff_train(const ff_dataset* d, const char* config_json, ff_model** out);
FF_API ff_status ff_model_load(const char* path_base, ff_model** out);
FF_API ff_status ff_model_save(const ff_model* m, const char* path_base);
FF_API size_t ff_model_embed_dim(const ff_model* m);
FF_API void ff_model_free(ff_model* m);

/* Fairness report as a JSON string; free with ff_string_free. */
FF_API ff_status ff_evaluate_json(const ff_model* m, const ff_dataset* d, const double* gammas,
                                  size_t n_gammas, char** report_json_out);
FF_API void ff_string_free(char* s);

/* ---- file-level run commands (manifest-writing; mirror the CLI) --------- */

/* Pass seed < 0 to keep the seed from the config. config_path may be a
 * manifest.json from a previous run, which reproduces that run. */
FF_API ff_status ff_run_generate(const char* config_path, const char* out_dir, int64_t seed);
FF_API ff_status ff_run_train(const char* dataset_base, const char* config_path,
                              const char* out_dir, int64_t seed);
FF_API ff_status ff_run_evaluate(const char* checkpoint_base, const char* dataset_base,
                                 const double* gammas, size_t n_gammas, const char* out_dir,
                                 int64_t pair_seed, const char* config_path);
FF_API ff_status ff_run_sweep(const char* dataset_base, const char* config_path, const char* axis,
                              const double* values, size_t n_values, const char* out_dir,
                              int64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* FAIRFPR_H */
