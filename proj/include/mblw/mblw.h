/*
 * mblw: semiclassical (DTWA) and exact dynamics of the disordered
 * Heisenberg chain started from the Neel state.
 *
 * Plain C interface. Objects are opaque handles created by *_create or
 * mblw_run_* functions and released with the matching *_destroy. Every
 * fallible call returns an mblw_status; on failure mblw_last_error() returns
 * a message describing the most recent error on the calling thread.
 */
#ifndef MBLW_MBLW_H
#define MBLW_MBLW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MBLW_BUILDING)
#    define MBLW_API __declspec(dllexport)
#  else
#    define MBLW_API __declspec(dllimport)
#  endif
#else
#  define MBLW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mblw_status {
  MBLW_OK = 0,
  MBLW_ERR_INVALID_ARGUMENT = 1,
  MBLW_ERR_SIZE_MISMATCH = 2,
  MBLW_ERR_INTEGRATOR = 3, /* step-size underflow in a DTWA trajectory */
  MBLW_ERR_CONVERGENCE = 4, /* Krylov or eigensolver failure */
  MBLW_ERR_IO = 5,
  MBLW_ERR_CONFIG = 6,
  MBLW_ERR_MISMATCH = 7, /* incompatible runs passed to compare */
  MBLW_ERR_RUN_FAILED = 8, /* more than 10% of realizations failed */
  MBLW_ERR_INTERNAL = 99
} mblw_status;

typedef enum mblw_spacing { MBLW_SPACING_LINEAR = 0, MBLW_SPACING_LOG_PLUS_ZERO = 1 } mblw_spacing;

typedef enum mblw_observable {
  MBLW_IMBALANCE = 0,
  MBLW_IMBALANCE_PER_N = 1,
  MBLW_QFI = 2,
  MBLW_QFI_PER_N = 3,
  MBLW_RENYI2_AVG = 4,
  MBLW_S1_HALFCHAIN = 5 /* exact backend only */
} mblw_observable;

typedef enum mblw_pair_filter { MBLW_PAIRS_ALL = 0, MBLW_PAIRS_NEAREST = 1 } mblw_pair_filter;

typedef enum mblw_cvrmsd_convention {
  MBLW_CVRMSD_MEAN = 0,
  MBLW_CVRMSD_SUM = 1
} mblw_cvrmsd_convention;

typedef struct mblw_model mblw_model;
typedef struct mblw_grid mblw_grid;
typedef struct mblw_series mblw_series;

MBLW_API const char* mblw_version(void);
MBLW_API const char* mblw_last_error(void);
MBLW_API const char* mblw_status_string(mblw_status status);

/* --- model ------------------------------------------------------------- */

/* Explicit fields h_i (units of J); |h_i| <= disorder_strength. */
MBLW_API mblw_status mblw_model_create(int n_sites, double coupling, double disorder_strength,
                                       const double* fields, mblw_model** out);

/* Fields drawn from the disorder substream of (master_seed, realization). */
MBLW_API mblw_status mblw_model_create_random(int n_sites, double coupling,
                                              double disorder_strength, uint64_t master_seed,
                                              uint64_t realization, mblw_model** out);
MBLW_API void mblw_model_destroy(mblw_model* model);
MBLW_API int mblw_model_n_sites(const mblw_model* model);
/* Copies N fields into out (capacity n). */
MBLW_API mblw_status mblw_model_fields(const mblw_model* model, double* out, size_t n);

/* --- time grid --------------------------------------------------------- */

MBLW_API mblw_status mblw_grid_create(double t_max, int m_points, mblw_spacing spacing,
                                      mblw_grid** out);
MBLW_API void mblw_grid_destroy(mblw_grid* grid);
MBLW_API size_t mblw_grid_size(const mblw_grid* grid);
MBLW_API mblw_status mblw_grid_points(const mblw_grid* grid, double* out, size_t n);

/* --- single-realization runs ------------------------------------------- */

/* Exact Neel-state dynamics. krylov_tol only matters above dimension 1000. */
MBLW_API mblw_status mblw_run_ed(const mblw_model* model, const mblw_grid* grid,
                                 double krylov_tol, mblw_pair_filter filter, mblw_series** out);

/* DTWA ensemble of n_traj trajectories; trajectory t uses the substream of
 * (master_seed, realization, t). Results do not depend on workers. */
MBLW_API mblw_status mblw_run_dtwa(const mblw_model* model, const mblw_grid* grid, int n_traj,
                                   uint64_t master_seed, uint64_t realization, int workers,
                                   double rel_tol, double abs_tol, mblw_pair_filter filter,
                                   mblw_series** out);

/* Exhaustive sum over all 4^N discrete phase points (N <= 6). */
MBLW_API mblw_status mblw_run_enumerate(const mblw_model* model, const mblw_grid* grid,
                                        double rel_tol, double abs_tol, mblw_pair_filter filter,
                                        mblw_series** out);

MBLW_API void mblw_series_destroy(mblw_series* series);
MBLW_API size_t mblw_series_size(const mblw_series* series);
MBLW_API int mblw_series_has(const mblw_series* series, mblw_observable obs);
/* Copies values and/or standard errors (either may be NULL). */
MBLW_API mblw_status mblw_series_get(const mblw_series* series, mblw_observable obs,
                                     double* values, double* stderrs, size_t n);
/* Writes the series in the results CSV format (header included). */
MBLW_API mblw_status mblw_series_write_csv(const mblw_series* series, int realization,
                                           const char* path);

/* --- sweeps ------------------------------------------------------------ */

/* Runs a sweep described by a JSON config (see README for the keys). */
MBLW_API mblw_status mblw_run_sweep_json(const char* config_json);
MBLW_API mblw_status mblw_run_sweep_file(const char* config_path);

/* Validates a config and writes its normalized JSON (defaults filled) into
 * buf. Returns MBLW_ERR_INVALID_ARGUMENT if cap is too small; *needed gets
 * the required size including the terminating NUL. */
MBLW_API mblw_status mblw_config_normalize(const char* config_json, char* buf, size_t cap,
                                           size_t* needed);

MBLW_API mblw_status mblw_compare(const char* exact_dir, const char* dtwa_dir,
                                  const char* out_file, mblw_cvrmsd_convention convention);

#ifdef __cplusplus
}
#endif

#endif /* MBLW_MBLW_H */
