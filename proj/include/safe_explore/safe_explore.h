/*
 * C interface to the safe exploration library.
 *
 * Objects are opaque handles created by se_*_create/load/generate functions
 * and released with the matching se_*_free. Every fallible call returns an
 * se_status; on failure se_last_error() describes the problem for the calling
 * thread until its next failing call.
 */
#ifndef SAFE_EXPLORE_H
#define SAFE_EXPLORE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define SE_API __declspec(dllexport)
#else
#  define SE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum se_status {
  SE_OK = 0,
  SE_ERR_INVALID_ARGUMENT = 1,
  SE_ERR_CONFIG = 2,
  SE_ERR_IO = 3,
  SE_ERR_FORMAT = 4,
  SE_ERR_NUMERIC = 5,
  SE_ERR_RUNTIME = 6
} se_status;

typedef enum se_policy {
  SE_POLICY_ST_SAFEMDP = 0,
  SE_POLICY_RANDOM = 1,
  SE_POLICY_UNSAFE = 2,
  SE_POLICY_IGNORE_TIME = 3,
  SE_POLICY_NO_CROSS_COV = 4
} se_policy;

typedef struct se_config se_config;
typedef struct se_env se_env;
typedef struct se_trace se_trace;
typedef struct se_result se_result;

typedef struct se_env_info {
  int rows;
  int cols;
  int horizon;
  double threshold;
  double noise_std;
  double min_safety;
  double max_safety;
  int start_state; /* lowest member of the initial safe set */
  int initial_safe_count;
} se_env_info;

typedef struct se_normalization {
  double input_min;
  double input_max;
  double output_min;
  double output_max;
} se_normalization;

typedef struct se_policy_summary {
  se_policy policy;
  int runs;
  double normalized_rmse_mean;
  double normalized_rmse_sd;
  double rmse_raw_mean;
  int failures;
  int unsafe_actions;
  int has_classification; /* 0 for policies without safe sets */
  double accuracy_mean;   /* NaN when undefined */
  double precision_mean;
  double recall_mean;
  double pooled_precision; /* from confusion counts pooled over runs */
  double pooled_recall;
} se_policy_summary;

SE_API const char* se_last_error(void);
SE_API const char* se_status_string(se_status status);
SE_API const char* se_version(void);

/* ---- configuration ---------------------------------------------------- */

SE_API se_status se_config_load(const char* path, se_config** out);
SE_API se_status se_config_parse(const char* json_text, se_config** out);
/* Serialized config; the string is owned by the handle. */
SE_API const char* se_config_json(se_config* cfg);
SE_API se_status se_config_set_seed(se_config* cfg, uint64_t seed);
SE_API se_status se_config_set_runs(se_config* cfg, int runs);
SE_API se_status se_config_set_workers(se_config* cfg, int workers);
SE_API se_status se_config_set_output_dir(se_config* cfg, const char* dir);
/* Comma-separated policy names, e.g. "st_safemdp,random". */
SE_API se_status se_config_select_policies(se_config* cfg, const char* policies);
SE_API uint64_t se_config_seed(const se_config* cfg);
SE_API void se_config_free(se_config* cfg);

/* ---- environments ----------------------------------------------------- */

/* Environment of run index `run_index` for the config's seed. */
SE_API se_status se_env_from_config(const se_config* cfg, int run_index, se_env** out);
SE_API se_status se_env_load_terrain(const char* const* frame_paths, size_t count, int steps,
                                     double threshold, se_env** out);
SE_API se_status se_env_info_get(const se_env* env, se_env_info* out);
SE_API se_status se_env_safety(const se_env* env, int t, int state, double* out);
/* Only available for terrain environments. */
SE_API se_status se_env_normalization(const se_env* env, se_normalization* out);
SE_API se_status se_env_write_csv(const se_env* env, const char* path);
/* JSON sidecar: threshold, noise, initial safe set, normalization. */
SE_API se_status se_env_write_meta(const se_env* env, const char* path);
SE_API void se_env_free(se_env* env);

/* ---- single episodes -------------------------------------------------- */

/* Runs one episode using the config's kernel and the entry for `policy`
 * (or its defaults when the config has no such entry). */
SE_API se_status se_episode_run(const se_env* env, const se_config* cfg, se_policy policy,
                                uint64_t seed, int steps, se_trace** out);
SE_API int se_trace_length(const se_trace* trace);
SE_API se_status se_trace_step(const se_trace* trace, int step, int* state, double* y,
                               int* unsafe, int* stuck);
SE_API int se_trace_unsafe_count(const se_trace* trace);
SE_API se_status se_trace_write_csv(const se_trace* trace, const char* path);
SE_API void se_trace_free(se_trace* trace);

/* ---- experiments ------------------------------------------------------ */

/* Runs every configured policy over every run and writes traces, runs.csv
 * and summary.csv into the config's output directory. */
SE_API se_status se_experiment_run(const se_config* cfg, se_result** out);
SE_API int se_result_policy_count(const se_result* result);
SE_API se_status se_result_summary(const se_result* result, int index, se_policy_summary* out);
/* Path of the written summary CSV; owned by the handle. */
SE_API const char* se_result_summary_path(const se_result* result);
SE_API void se_result_free(se_result* result);

SE_API const char* se_policy_name(se_policy policy);

#ifdef __cplusplus
}
#endif

#endif /* SAFE_EXPLORE_H */
