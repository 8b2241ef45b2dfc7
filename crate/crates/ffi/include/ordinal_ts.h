#ifndef ORDINAL_TS_H
#define ORDINAL_TS_H

#pragma once

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OtsStatus {
  OTS_STATUS_OK = 0,
  OTS_STATUS_NULL_POINTER = 1,
  OTS_STATUS_INVALID_DIMENSION = 2,
  OTS_STATUS_INVALID_PARAMETER = 3,
  OTS_STATUS_INVALID_INPUT = 4,
  OTS_STATUS_SINGULAR_MATRIX = 5,
  OTS_STATUS_INSUFFICIENT_DATA = 6,
  OTS_STATUS_OUT_OF_SUPPORT = 7,
  OTS_STATUS_DEGENERATE_DISTRIBUTION = 8,
  OTS_STATUS_PRECONDITION = 9,
  OTS_STATUS_IO = 10,
  OTS_STATUS_PARSE = 11,
  OTS_STATUS_CONFIG = 12,
  OTS_STATUS_INVARIANT = 13,
  OTS_STATUS_PANIC = 14,
} OtsStatus;

/**
 * Kernel family selector for [`ots_encode`].
 */
typedef enum OtsFamily {
  OTS_FAMILY_GAUSSIAN = 0,
  OTS_FAMILY_STUDENT_T = 1,
  OTS_FAMILY_LAPLACE = 2,
} OtsFamily;

/**
 * Opaque bin partition.
 */
typedef struct OtsBins OtsBins;

/**
 * Opaque trained model.
 */
typedef struct OtsModel OtsModel;

/**
 * Scalar summary of the influence-ratio bound for one instance pair.
 */
typedef struct OtsInfluenceSummary {
  double ratio;
  double lower_bound;
  double upper_bound;
  double kappa2;
  double lambda_min_p;
  double lambda_max_p;
  double residual;
} OtsInfluenceSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `cap` bytes. Returns the full message length.
 *
 * # Safety
 * `buf` must be writable for `cap` bytes or null.
 */
size_t ots_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ots_version(void);

/**
 * Creates `k` equal-width bins on `[a, b]`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum OtsStatus ots_bins_new(size_t k, double a, double b, struct OtsBins **out);

/**
 * Releases a bin handle. Null is ignored.
 *
 * # Safety
 * `bins` must come from [`ots_bins_new`] and not be used afterwards.
 */
void ots_bins_free(struct OtsBins *bins);

/**
 * Number of bins.
 *
 * # Safety
 * `bins` must be a live handle or null (returns 0).
 */
size_t ots_bins_count(const struct OtsBins *bins);

/**
 * Writes the `k` bin centers.
 *
 * # Safety
 * `bins` must be live; `out` writable for `len` doubles.
 */
enum OtsStatus ots_bins_centers(const struct OtsBins *bins, double *out, size_t len);

/**
 * Encodes target `y` as a bin distribution written to `out` (`len = k`).
 * `nu` is used only by the Student-t family.
 *
 * # Safety
 * `bins` must be live; `out` writable for `len` doubles.
 */
enum OtsStatus ots_encode(const struct OtsBins *bins,
                          enum OtsFamily family,
                          double sigma,
                          double nu,
                          double y,
                          double *out,
                          size_t len);

/**
 * Probability-weighted mean of bin centers.
 *
 * # Safety
 * `bins` must be live; `probs` readable for `len` doubles; `out` writable.
 */
enum OtsStatus ots_reconstruct(const struct OtsBins *bins,
                               const double *probs,
                               size_t len,
                               double *out);

/**
 * Ordinal cross-entropy of `q` against `p`; base-10 logs when `base10` is set.
 *
 * # Safety
 * `p`, `q` readable for `k` doubles; `out` writable.
 */
enum OtsStatus ots_oce(const double *p, const double *q, size_t k, bool base10, double *out);

/**
 * Cross-entropy of `q` against `p`; base-10 logs when `base10` is set.
 *
 * # Safety
 * `p`, `q` readable for `k` doubles; `out` writable.
 */
enum OtsStatus ots_ce(const double *p, const double *q, size_t k, bool base10, double *out);

/**
 * Gradient of the ordinal cross-entropy at `softmax(logits)`.
 *
 * # Safety
 * `p`, `logits` readable and `out` writable for `k` doubles.
 */
enum OtsStatus ots_oce_grad_logits(const double *p, const double *logits, size_t k, double *out);

/**
 * Nemenyi critical distance.
 *
 * # Safety
 * `out` writable.
 */
enum OtsStatus ots_nemenyi_cd(size_t k_algorithms, size_t n_datasets, double q_alpha, double *out);

/**
 * Loads a JSON checkpoint written by the command-line tool.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` a valid handle slot.
 */
enum OtsStatus ots_model_load(const char *path, struct OtsModel **out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`ots_model_load`] and not be used afterwards.
 */
void ots_model_free(struct OtsModel *model);

/**
 * Lookback, horizon, channels and bins of a model.
 *
 * # Safety
 * `model` must be live; every out pointer writable.
 */
enum OtsStatus ots_model_shape(const struct OtsModel *model,
                               size_t *w,
                               size_t *h,
                               size_t *m,
                               size_t *k);

/**
 * Runs the model on a scaled `w×m` row-major window. Writes the `h×m`
 * point forecast and the `h×m×k` bin probabilities (row-major).
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum OtsStatus ots_model_forward(const struct OtsModel *model,
                                 const double *x_norm,
                                 size_t x_len,
                                 double *point_out,
                                 size_t point_len,
                                 double *probs_out,
                                 size_t probs_len);

/**
 * Influence ratio and its bounds for a regression/classification pair
 * sharing `x` (length `d`). `sigma_x` is `d×d`, `beta` is `d×k`,
 * `p_expected` is `k×k`, all row-major; `label` is 0-based.
 *
 * # Safety
 * Buffers must hold the stated number of doubles; `out` writable.
 */
enum OtsStatus ots_influence_bounds(const double *x,
                                    size_t d,
                                    double y,
                                    const double *theta,
                                    const double *sigma_x,
                                    const double *beta,
                                    size_t k,
                                    size_t label,
                                    const double *p_expected,
                                    struct OtsInfluenceSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORDINAL_TS_H */
