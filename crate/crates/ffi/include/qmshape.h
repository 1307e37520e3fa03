#ifndef QMSHAPE_H
#define QMSHAPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define QM_BRACKET_AUTO 0

#define QM_BRACKET_SERIES 1

#define QM_BRACKET_QUADRATURE 2

typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_INVALID_ARGUMENT = 1,
  QM_STATUS_NULL_POINTER = 2,
  QM_STATUS_BUFFER_TOO_SMALL = 3,
  QM_STATUS_DEGENERATE_DRIVING = 4,
  QM_STATUS_DEGENERATE_RESPONSE = 5,
  QM_STATUS_NUMERICAL_CANCELLATION = 6,
  QM_STATUS_RANGE = 7,
  QM_STATUS_SPECTRUM = 8,
  QM_STATUS_PANIC = 9,
} QmStatus;

/**
 * Shaped driving together with the grids and target it was built for.
 */
typedef struct QmDriving QmDriving;

typedef struct QmSpectrum QmSpectrum;

/**
 * Shaping run for one Hermite supermode on a uniform grid.
 */
typedef struct QmShaperParams {
  /**
   * Supermode index, 1-based.
   */
  size_t target;
  double l_search;
  double l_phys;
  double t_w;
  size_t max_steps;
  double tol;
  /**
   * One of the `QM_BRACKET_*` constants.
   */
  int32_t bracket;
  size_t n_t;
  size_t n_z;
} QmShaperParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Reference parameters: T_W = 9, L_phys = 10, L_search = 5, 513 points.
 */
struct QmShaperParams qm_shaper_params_default(size_t target);

/**
 * Shape a driving for Hermite mode `params.target`. On success `*out`
 * owns a new handle.
 *
 * # Safety
 * `params` must point to a valid struct and `out` to writable storage.
 */
enum QmStatus qm_shape_driving(const struct QmShaperParams *params, struct QmDriving **out);

/**
 * Number of time samples, 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle.
 */
size_t qm_driving_len(const struct QmDriving *d);

/**
 * Copy the envelope samples into `buf` (capacity `cap`); `*written`
 * receives the sample count even when the buffer is too small.
 *
 * # Safety
 * `d` must be a live handle; `buf` must hold `cap` doubles; `written` may be null.
 */
enum QmStatus qm_driving_samples(const struct QmDriving *d,
                                 double *buf,
                                 size_t cap,
                                 size_t *written);

/**
 * Iterations taken and energy fraction lost at the physical length.
 *
 * # Safety
 * `d` must be a live handle; outputs may be null.
 */
enum QmStatus qm_driving_stats(const struct QmDriving *d, size_t *steps, double *leakage);

/**
 * # Safety
 * `d` must be null or a handle from [`qm_shape_driving`] not yet freed.
 */
void qm_driving_free(struct QmDriving *d);

/**
 * Overlap of write-then-read output with the target mode.
 *
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum QmStatus qm_restoration_fidelity(const struct QmDriving *d, double *out);

/**
 * Schmidt spectrum of the full cycle with this driving for write and read.
 *
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum QmStatus qm_spectrum_compute(const struct QmDriving *d, struct QmSpectrum **out);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
size_t qm_spectrum_len(const struct QmSpectrum *s);

/**
 * Descending eigenvalues λ_k.
 *
 * # Safety
 * `s` must be a live handle; `buf` must hold `cap` doubles; `written` may be null.
 */
enum QmStatus qm_spectrum_lambdas(const struct QmSpectrum *s,
                                  double *buf,
                                  size_t cap,
                                  size_t *written);

/**
 * # Safety
 * `s` must be null or a handle from [`qm_spectrum_compute`] not yet freed.
 */
void qm_spectrum_free(struct QmSpectrum *s);

/**
 * Nullifier variances of the four-node linear cluster built from squeezed
 * inputs with the given variances. `eta < 0` skips the memory loss channel.
 * `baselines` may be null.
 *
 * # Safety
 * `variances`, `out` (and `baselines` when non-null) must hold 4 doubles.
 */
enum QmStatus qm_cluster_nullifiers(const double *variances,
                                    double eta,
                                    double *out,
                                    double *baselines);

/**
 * # Safety
 * `out` must be writable.
 */
enum QmStatus qm_bessel_j0(double x, double *out);

/**
 * Message for the last failed call on this thread; empty after success.
 * Valid until the next call on the same thread.
 */
const char *qm_last_error(void);

const char *qm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMSHAPE_H */
