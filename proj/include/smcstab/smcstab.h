/* C interface to the smcstab library: opaque handles, integer status codes,
 * and a thread-local error message. All functions return SMC_OK on success.
 * Handles must be released with the matching *_free call. */

#ifndef SMCSTAB_H
#define SMCSTAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SMC_API __declspec(dllexport)
#else
#define SMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smc_status {
  SMC_OK = 0,
  SMC_ERR_INVALID_ARGUMENT = 1,
  SMC_ERR_IO = 2,
  SMC_ERR_PARSE = 3,
  SMC_ERR_CONFIG = 4,
  SMC_ERR_DIMENSION = 5,
  SMC_ERR_MODEL = 6,
  SMC_ERR_DEGENERACY = 7,
  SMC_ERR_NUMERIC = 8,
  SMC_ERR_UNSUPPORTED = 9,
  SMC_ERR_EXPERIMENT = 10,
  SMC_ERR_INTERNAL = 11
} smc_status;

typedef struct smc_model smc_model;
typedef struct smc_trajectory smc_trajectory;
typedef struct smc_filter smc_filter;

/* Message describing the most recent failure on this thread. */
SMC_API const char* smc_last_error(void);
SMC_API const char* smc_status_name(smc_status status);

/* ---- models ---- */

/* Loads a model file (kinds: discrete, lgss, arch). */
SMC_API smc_status smc_model_load(const char* path, smc_model** out);
SMC_API smc_status smc_model_kind(const smc_model* model, char* buf,
                                  size_t buf_len);
SMC_API void smc_model_free(smc_model* model);

/* ---- simulation ---- */

SMC_API smc_status smc_simulate(const smc_model* model, int64_t length,
                                uint64_t seed, smc_trajectory** out);
SMC_API int64_t smc_trajectory_length(const smc_trajectory* traj);
SMC_API int smc_trajectory_state_dim(const smc_trajectory* traj);
SMC_API int smc_trajectory_obs_dim(const smc_trajectory* traj);
/* Column-major: value of component i at time t lands at t*dim + i. The
 * buffer must hold length*dim doubles. */
SMC_API smc_status smc_trajectory_states(const smc_trajectory* traj, double* buf,
                                         size_t buf_len);
SMC_API smc_status smc_trajectory_observations(const smc_trajectory* traj,
                                               double* buf, size_t buf_len);
SMC_API void smc_trajectory_free(smc_trajectory* traj);

/* ---- bootstrap particle filter ---- */

SMC_API smc_status smc_filter_create(const smc_model* model,
                                     int64_t num_particles, uint64_t seed,
                                     smc_filter** out);
/* One correction/selection/mutation step. For discrete models pass the
 * symbol as a single double; for vector observations pass obs_dim values. */
SMC_API smc_status smc_filter_step(smc_filter* filter, const double* obs,
                                   int obs_dim);
/* mode: 0 = predictor, 1 = filter (the filter mode is only available
 * between weighting and the next step, i.e. not through this interface;
 * estimates here are predictor-mode). h is a catalog spec such as
 * "indicator(0)". */
SMC_API smc_status smc_filter_estimate(const smc_filter* filter, const char* h,
                                       double* out);
SMC_API smc_status smc_filter_log_likelihood(const smc_filter* filter,
                                             double* out);
SMC_API int64_t smc_filter_time(const smc_filter* filter);
SMC_API void smc_filter_free(smc_filter* filter);

/* ---- exact oracles (discrete models) ---- */

/* Forward filter over n symbols. Output buffers may be NULL when a piece is
 * not wanted; otherwise predictors needs (n+1)*m doubles, filters n*m,
 * step_log_densities n. */
SMC_API smc_status smc_exact_filter_discrete(const smc_model* model,
                                             const int32_t* obs, int64_t n,
                                             double* predictors, double* filters,
                                             double* step_log_densities,
                                             double* log_likelihood);
/* Asymptotic variance of the scaled predictor error at time n and of the
 * scaled filter error at time n-1 (h is a catalog spec). */
SMC_API smc_status smc_exact_variance_discrete(const smc_model* model,
                                               const int32_t* obs, int64_t n,
                                               const char* h, double* sigma2,
                                               double* sigma2_filter);

/* ---- experiment dispatch ---- */

/* Runs a config file end to end, writing CSV series and reports. command,
 * out_dir, seed and threads override/validate the config when
 * non-NULL/nonzero: a non-NULL command must match the config's command.
 * Returns SMC_OK when the experiment ran and its pass flags (if any) hold,
 * SMC_ERR_EXPERIMENT when it ran but failed its criteria, and a config/IO
 * status when it could not run. */
SMC_API smc_status smc_run_command(const char* config_path, const char* command,
                                   const char* out_dir, const uint64_t* seed,
                                   int threads);

#ifdef __cplusplus
}
#endif

#endif /* SMCSTAB_H */
