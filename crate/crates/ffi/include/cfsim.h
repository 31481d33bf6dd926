#ifndef CFSIM_H
#define CFSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum CfsimStatus {
  CFSIM_STATUS_OK = 0,
  CFSIM_STATUS_NULL_POINTER = 1,
  CFSIM_STATUS_INVALID_ARGUMENT = 2,
  CFSIM_STATUS_CONFIG = 3,
  CFSIM_STATUS_NUMERICAL = 4,
  CFSIM_STATUS_IO = 5,
  CFSIM_STATUS_PANIC = 6,
} CfsimStatus;

/**
 * Opaque AR fading model.
 */
typedef struct CfsimArModel CfsimArModel;

/**
 * Opaque simulation configuration.
 */
typedef struct CfsimConfig CfsimConfig;

/**
 * Opaque list of metric records produced by one experiment run.
 */
typedef struct CfsimRecords CfsimRecords;

/**
 * Borrowed view of one record. String pointers stay valid until the
 * owning [`CfsimRecords`] is freed.
 */
typedef struct CfsimRecord {
  const char *experiment;
  const char *sweep_name;
  double sweep_value;
  const char *scheme;
  /**
   * UE index, or -1 for aggregate metrics.
   */
  int64_t ue_index;
  const char *metric;
  double value;
  uint64_t seed;
} CfsimRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *cfsim_last_error_message(void);

/**
 * Maximum Doppler shift in Hz for a speed in m/s and a carrier in Hz.
 *
 * # Safety
 * `out` must be null or valid for a write of one `double`.
 */
enum CfsimStatus cfsim_doppler_frequency(double speed, double carrier_freq, double *out);

/**
 * Coherence time `3 / (16 f_D)` in seconds; `INFINITY` for `f_D = 0`.
 *
 * # Safety
 * `out` must be null or valid for a write of one `double`.
 */
enum CfsimStatus cfsim_coherence_time(double doppler, double *out);

/**
 * Bessel function `J0(x)`.
 */
double cfsim_bessel_j0(double x);

/**
 * Jakes autocorrelation `J0(2π f_D T_s n)`.
 */
double cfsim_jakes_autocorrelation(double lag, double doppler, double sample_period);

/**
 * Three-slope path loss in dB at distance `d` metres, default constants.
 */
double cfsim_pathloss_db(double d);

/**
 * Fits an AR(`order`) model to the Jakes autocorrelation.
 *
 * # Safety
 * `out` must be null or valid for a write of one pointer. The handle must
 * be released with [`cfsim_ar_free`].
 */
enum CfsimStatus cfsim_ar_fit_jakes(size_t order,
                                    double doppler,
                                    double sample_period,
                                    struct CfsimArModel **out);

/**
 * Model order, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle from [`cfsim_ar_fit_jakes`].
 */
size_t cfsim_ar_order(const struct CfsimArModel *model);

/**
 * Copies the AR coefficients `a_1..a_M` into `buf`, which must hold at
 * least `len >= order` values.
 *
 * # Safety
 * `model` must be a live handle and `buf` valid for `len` writes.
 */
enum CfsimStatus cfsim_ar_coefficients(const struct CfsimArModel *model, double *buf, size_t len);

/**
 * Steady-state NMSE of the Kalman `horizon`-step predictor for the model
 * observed with noise variance `obs_noise_var`.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for one write.
 */
enum CfsimStatus cfsim_ar_kalman_nmse(const struct CfsimArModel *model,
                                      double obs_noise_var,
                                      size_t horizon,
                                      double *out);

/**
 * Releases a model handle; null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void cfsim_ar_free(struct CfsimArModel *model);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be null or valid for one write; release with [`cfsim_config_free`].
 */
enum CfsimStatus cfsim_config_default(struct CfsimConfig **out);

/**
 * Parses and validates a TOML configuration; omitted keys take defaults.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` valid for one write.
 */
enum CfsimStatus cfsim_config_from_toml(const char *toml, struct CfsimConfig **out);

/**
 * Releases a configuration handle; null is ignored.
 *
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void cfsim_config_free(struct CfsimConfig *config);

/**
 * Runs `experiment` ("fig3", "fig4", "fig5" or "calib") with `trials`
 * overriding the trial count when nonzero.
 *
 * # Safety
 * `config` must be a live handle, `experiment` a NUL-terminated string and
 * `out` valid for one write; release with [`cfsim_records_free`].
 */
enum CfsimStatus cfsim_run_experiment(const struct CfsimConfig *config,
                                      const char *experiment,
                                      uint64_t seed,
                                      size_t trials,
                                      struct CfsimRecords **out);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `records` must be null or a live handle.
 */
size_t cfsim_records_len(const struct CfsimRecords *records);

/**
 * Reads record `index`.
 *
 * # Safety
 * `records` must be a live handle and `out` valid for one write.
 */
enum CfsimStatus cfsim_records_get(const struct CfsimRecords *records,
                                   size_t index,
                                   struct CfsimRecord *out);

/**
 * Writes the records as CSV to `path`.
 *
 * # Safety
 * `records` must be a live handle and `path` a NUL-terminated string.
 */
enum CfsimStatus cfsim_records_write_csv(const struct CfsimRecords *records, const char *path);

/**
 * Releases a record list; null is ignored.
 *
 * # Safety
 * `records` must be null or a handle not yet freed.
 */
void cfsim_records_free(struct CfsimRecords *records);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFSIM_H */
