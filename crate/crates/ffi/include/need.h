#ifndef NEED_H
#define NEED_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of every call. Values 1-3 match the CLI exit codes.
 */
typedef enum NeedStatus {
  NEED_STATUS_OK = 0,
  /*
   Bad arguments or configuration.
   */
  NEED_STATUS_VALIDATION = 1,
  /*
   Input data unusable (schema, duplicates, too short).
   */
  NEED_STATUS_DATA = 2,
  NEED_STATUS_INTERNAL = 3,
  NEED_STATUS_NULL_POINTER = 4,
  NEED_STATUS_PANIC = 5,
} NeedStatus;

/*
 Opaque validated panel.
 */
typedef struct NeedPanel NeedPanel;

/*
 One energetics row.
 */
typedef struct NeedEnergyRow {
  int32_t year;
  double epsilon;
  double velocity;
  double acceleration;
  double jerk;
  double kinetic;
  double potential;
  double hamiltonian;
  double lagrangian;
  double accel_energy;
  double jerk_energy;
  double total_energy;
  double power;
} NeedEnergyRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. The pointer
 stays valid until the next call on the same thread.
 */
const char *need_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *need_version(void);

/*
 Loads and validates a panel CSV with default ingest settings: long
 layout, or wide with the default column and indicator names.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NeedStatus need_panel_load(const char *path, bool wide, struct NeedPanel **out);

/*
 Releases a panel. NULL is ignored.

 # Safety
 `panel` must come from [`need_panel_load`] and not be used afterwards.
 */
void need_panel_free(struct NeedPanel *panel);

/*
 Number of retained countries and observations.

 # Safety
 `panel` must be a live handle; outputs must be writable.
 */
enum NeedStatus need_panel_counts(const struct NeedPanel *panel,
                                  size_t *n_countries,
                                  size_t *n_observations);

/*
 Copies country `index`'s code (NUL-terminated, truncated to `cap`) into
 `buf`.

 # Safety
 `panel` must be a live handle; `buf` must hold `cap` bytes.
 */
enum NeedStatus need_panel_country_code(const struct NeedPanel *panel,
                                        size_t index,
                                        char *buf,
                                        size_t cap);

/*
 Copies one country's years, ln GDP and ln CO2 (each `cap` long) and
 writes the row count to `len`.

 # Safety
 `panel` must be a live handle; arrays must hold `cap` elements.
 */
enum NeedStatus need_panel_series(const struct NeedPanel *panel,
                                  size_t index,
                                  int32_t *years,
                                  double *ln_gdp,
                                  double *ln_co2,
                                  size_t cap,
                                  size_t *len);

/*
 Rolling trailing-window elasticity aligned to the input: `out[i]` is the
 estimate for the window ending at `years[i]`, NaN where none exists.

 # Safety
 All arrays must hold `n` elements.
 */
enum NeedStatus need_rolling_elasticity(const int32_t *years,
                                        const double *ln_gdp,
                                        const double *ln_co2,
                                        size_t n,
                                        size_t window_length,
                                        double *out);

/*
 Local-level Kalman smoother over an evenly spaced series with NaN gaps.
 Writes the smoothed level and its variance (`variance` may be NULL).

 # Safety
 Arrays must hold `n` elements.
 */
enum NeedStatus need_smooth(const double *obs,
                            size_t n,
                            double process_variance,
                            double observation_variance,
                            double *smoothed,
                            double *variance);

/*
 Maximum-likelihood process and observation variances on the tuning grid.

 # Safety
 `obs` must hold `n` elements; outputs must be writable.
 */
enum NeedStatus need_tune_smoother(const double *obs,
                                   size_t n,
                                   double *process_variance,
                                   double *observation_variance);

/*
 Derivative chain and energies of a smoothed path around `equilibrium`.
 Years in runs shorter than the minimum are dropped, so `*len <= n`.

 # Safety
 `years` and `epsilon` must hold `n` elements, `out` at least `n` rows.
 */
enum NeedStatus need_energetics(const int32_t *years,
                                const double *epsilon,
                                size_t n,
                                double equilibrium,
                                struct NeedEnergyRow *out,
                                size_t *len);

/*
 Runs a pipeline command (`ingest`, `elasticity`, `regimes`, `forecast`,
 `earlywarn` or `run`). `settings` holds `key = value` lines as in a config
 file and may be NULL.

 # Safety
 Strings must be NUL-terminated.
 */
enum NeedStatus need_pipeline_run(const char *command, const char *settings);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEED_H */
