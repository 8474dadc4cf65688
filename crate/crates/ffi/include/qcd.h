#ifndef QCD_H
#define QCD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define QCD_SCHEME_COHERENT 0

#define QCD_SCHEME_SQUEEZED 1

#define QCD_SCHEME_ENTANGLED 2

#define QCD_SCHEME_KENNEDY 3

#define QCD_SCHEME_DV_HOMODYNE 4

#define QCD_SCHEME_DV_SPD 5

#define QCD_MODULATION_NONE 0

#define QCD_MODULATION_BPSK 1

#define QCD_OUTCOME_DETECTED 0

#define QCD_OUTCOME_FALSE_ALARM 1

#define QCD_OUTCOME_NO_ALARM 2

/**
 * Result code of every fallible call.
 */
typedef enum QcdStatus {
  QCD_STATUS_OK = 0,
  QCD_STATUS_USAGE = 1,
  QCD_STATUS_DOMAIN = 2,
  QCD_STATUS_NUMERICAL = 3,
  QCD_STATUS_RESOURCE = 4,
  QCD_STATUS_RANGE = 5,
  QCD_STATUS_IO = 6,
  QCD_STATUS_NULL_POINTER = 7,
  QCD_STATUS_PANIC = 8,
  /**
   * A query whose answer does not exist yet (e.g. alarm time before an alarm).
   */
  QCD_STATUS_NOT_AVAILABLE = 9,
} QcdStatus;

/**
 * Monte-Carlo ARL table.
 */
typedef struct QcdArlTable QcdArlTable;

/**
 * CUSUM detector state.
 */
typedef struct QcdCusum QcdCusum;

/**
 * A transmitter/receiver configuration.
 */
typedef struct QcdScheme QcdScheme;

/**
 * Outcome of one simulated detection run. Times are in pulses; `tau` and
 * `ml_estimate` are meaningful for detected runs and false alarms only.
 */
typedef struct QcdDetection {
  uint32_t outcome;
  uint64_t n_d;
  uint64_t tau;
  uint64_t ml_estimate;
} QcdDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *qcd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qcd_version(void);

/**
 * Creates a scheme. `block` is read for `QCD_SCHEME_ENTANGLED` and `neps`
 * for `QCD_SCHEME_KENNEDY`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QcdStatus qcd_scheme_new(uint32_t kind,
                              uint32_t modulation,
                              double n_photons,
                              double na,
                              uint32_t block,
                              double neps,
                              struct QcdScheme **out_scheme);

/**
 * # Safety
 * `scheme` must be null or a handle from `qcd_scheme_new` not yet freed.
 */
void qcd_scheme_free(struct QcdScheme *scheme);

/**
 * Relative entropy per pulse; `*out_infinite` is set to 1 (and `*out_cre`
 * to infinity) when the divergence is unbounded.
 *
 * # Safety
 * `scheme` must be a live handle; the out-pointers must be writable.
 */
enum QcdStatus qcd_scheme_cre(const struct QcdScheme *scheme,
                              double eta1,
                              double eta2,
                              double *out_cre,
                              int32_t *out_infinite);

/**
 * Coherent-light relative entropy with `n + na` photons per pulse.
 *
 * # Safety
 * `out_cre` must be writable.
 */
enum QcdStatus qcd_cre_coherent(double eta1,
                                double eta2,
                                double n_photons,
                                double na,
                                double *out_cre);

/**
 * Displaced squeezed-light relative entropy.
 *
 * # Safety
 * `out_cre` must be writable.
 */
enum QcdStatus qcd_cre_squeezed(double eta1,
                                double eta2,
                                double n_photons,
                                double na,
                                double *out_cre);

/**
 * Displaced single-photon homodyne relative entropy.
 *
 * # Safety
 * `out_cre` must be writable.
 */
enum QcdStatus qcd_cre_dv_homodyne(double eta1, double eta2, double alpha, double *out_cre);

/**
 * BPSK homodyne channel capacity in bits per pulse.
 *
 * # Safety
 * `out_bits` must be writable.
 */
enum QcdStatus qcd_bpsk_capacity(double eta, double n_photons, double *out_bits);

/**
 * # Safety
 * `out_cusum` must be writable.
 */
enum QcdStatus qcd_cusum_new(double threshold, struct QcdCusum **out_cusum);

/**
 * # Safety
 * `cusum` must be null or a handle from `qcd_cusum_new` not yet freed.
 */
void qcd_cusum_free(struct QcdCusum *cusum);

/**
 * Feeds one log-likelihood ratio; `*out_alarm` becomes 1 on the alarm step.
 * Stepping after an alarm is a usage error.
 *
 * # Safety
 * `cusum` must be a live handle not used concurrently; `out_alarm` writable.
 */
enum QcdStatus qcd_cusum_step(struct QcdCusum *cusum, double llr, int32_t *out_alarm);

/**
 * Current decision statistic `G[k]`.
 *
 * # Safety
 * `cusum` must be a live handle; `out_value` writable.
 */
enum QcdStatus qcd_cusum_decision(const struct QcdCusum *cusum, double *out_value);

/**
 * Steps taken so far.
 *
 * # Safety
 * `cusum` must be a live handle; `out_k` writable.
 */
enum QcdStatus qcd_cusum_steps(const struct QcdCusum *cusum, uint64_t *out_k);

/**
 * Alarm step; `QCD_STATUS_NOT_AVAILABLE` before any alarm.
 *
 * # Safety
 * `cusum` must be a live handle; `out_k` writable.
 */
enum QcdStatus qcd_cusum_alarm_time(const struct QcdCusum *cusum, uint64_t *out_k);

/**
 * Maximum-likelihood change step given the data so far.
 *
 * # Safety
 * `cusum` must be a live handle; `out_k` writable.
 */
enum QcdStatus qcd_cusum_ml_estimate(const struct QcdCusum *cusum, uint64_t *out_k);

/**
 * Simulates one detection run with the change at pulse `n_c`.
 *
 * # Safety
 * `scheme` must be a live handle; `out_result` writable.
 */
enum QcdStatus qcd_run_detection(const struct QcdScheme *scheme,
                                 double eta1,
                                 double eta2,
                                 uint64_t n_c,
                                 uint64_t horizon,
                                 double threshold,
                                 uint64_t seed,
                                 uint64_t stream,
                                 struct QcdDetection *out_result);

/**
 * Estimates the ARL over `points` thresholds in `[h_min, h_max]`.
 *
 * # Safety
 * `scheme` must be a live handle; `out_table` writable.
 */
enum QcdStatus qcd_arl_estimate(const struct QcdScheme *scheme,
                                double eta1,
                                double eta2,
                                double h_min,
                                double h_max,
                                uint32_t points,
                                uint32_t runs,
                                uint64_t run_length,
                                uint64_t seed,
                                struct QcdArlTable **out_table);

/**
 * # Safety
 * `table` must be null or a handle from `qcd_arl_estimate` not yet freed.
 */
void qcd_arl_free(struct QcdArlTable *table);

/**
 * Number of grid points.
 *
 * # Safety
 * `table` must be a live handle; `out_len` writable.
 */
enum QcdStatus qcd_arl_len(const struct QcdArlTable *table, uint64_t *out_len);

/**
 * Row `index` of the table: threshold, ARL and censored fraction.
 *
 * # Safety
 * `table` must be a live handle; the out-pointers must be writable.
 */
enum QcdStatus qcd_arl_row(const struct QcdArlTable *table,
                           uint64_t index,
                           double *out_h,
                           double *out_gamma,
                           double *out_censor_frac);

/**
 * Threshold reaching ARL `gamma_target`, interpolated in log ARL.
 *
 * # Safety
 * `table` must be a live handle; `out_h` writable.
 */
enum QcdStatus qcd_arl_threshold(const struct QcdArlTable *table,
                                 double gamma_target,
                                 double *out_h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCD_H */
