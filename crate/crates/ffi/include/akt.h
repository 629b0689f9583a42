#ifndef AKT_H
#define AKT_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum AktStatus {
  AKT_STATUS_OK = 0,
  AKT_STATUS_NULL_POINTER = 1,
  AKT_STATUS_INVALID_ARGUMENT = 2,
  AKT_STATUS_DIMENSION_MISMATCH = 3,
  AKT_STATUS_OUT_OF_RANGE = 4,
  AKT_STATUS_POINT_OUTSIDE_WINDOW = 5,
  AKT_STATUS_EMPTY_WINDOW = 6,
  AKT_STATUS_REFINEMENT_TOO_DEEP = 7,
  AKT_STATUS_MISSING_ORIGIN = 8,
  AKT_STATUS_INVARIANT = 9,
  AKT_STATUS_IO = 10,
  AKT_STATUS_PANIC = 11,
} AktStatus;

/**
 * Opaque point configuration.
 */
typedef struct AktConfig AktConfig;

/**
 * Opaque result of one transport run.
 */
typedef struct AktReport AktReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *akt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *akt_version(void);

/**
 * Configuration from `n` points stored row-major in `points` (`n * d`
 * doubles) inside the box `[lower, upper]`.
 *
 * # Safety
 * `lower` and `upper` must point to `d` doubles, `points` to `n * d` doubles
 * (may be null when `n == 0`), and `out` must be writable.
 */
enum AktStatus akt_config_new(size_t d,
                              const double *lower,
                              const double *upper,
                              const double *points,
                              size_t n,
                              uint64_t seed,
                              struct AktConfig **out);

/**
 * Poisson process of the given intensity on `[lower, upper)`.
 *
 * # Safety
 * `lower` and `upper` must point to `d` doubles and `out` must be writable.
 */
enum AktStatus akt_config_sample_poisson(size_t d,
                                         const double *lower,
                                         const double *upper,
                                         double intensity,
                                         uint64_t seed,
                                         struct AktConfig **out);

/**
 * `n` i.i.d. uniform points on `[lower, upper)`.
 *
 * # Safety
 * `lower` and `upper` must point to `d` doubles and `out` must be writable.
 */
enum AktStatus akt_config_sample_binomial(size_t d,
                                          const double *lower,
                                          const double *upper,
                                          size_t n,
                                          uint64_t seed,
                                          struct AktConfig **out);

/**
 * New configuration with the origin appended as the last point.
 *
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
enum AktStatus akt_config_palm(const struct AktConfig *config, struct AktConfig **out);

/**
 * Parses a configuration from NUL-terminated JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum AktStatus akt_config_from_json(const char *json, struct AktConfig **out);

/**
 * JSON text of the configuration; release it with [`akt_string_free`].
 *
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
enum AktStatus akt_config_to_json(const struct AktConfig *config, char **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `config` must be null or a live handle.
 */
size_t akt_config_len(const struct AktConfig *config);

/**
 * Dimension, or 0 for a null handle.
 *
 * # Safety
 * `config` must be null or a live handle.
 */
size_t akt_config_dim(const struct AktConfig *config);

/**
 * Copies point `index` into `coords` (`d` doubles).
 *
 * # Safety
 * `config` must be a live handle and `coords` must hold `d` doubles.
 */
enum AktStatus akt_config_point(const struct AktConfig *config, size_t index, double *coords);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void akt_config_free(struct AktConfig *config);

/**
 * Runs `levels` stages on the box of `shift + 2^levels Z^d` containing the
 * domain's center.
 *
 * # Safety
 * `config` must be a live handle, `shift` must hold `d` doubles and `out`
 * must be writable.
 */
enum AktStatus akt_run(const struct AktConfig *config,
                       const double *shift,
                       uint32_t levels,
                       struct AktReport **out);

/**
 * Number of cells (owned and ownerless), or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t akt_report_cell_count(const struct AktReport *report);

/**
 * Bounds of cell `index` and the id of the point owning it (-1 when the
 * cell has no owner).
 *
 * # Safety
 * `report` must be a live handle; `lower` and `upper` must hold `d` doubles;
 * `owner` may be null.
 */
enum AktStatus akt_report_cell(const struct AktReport *report,
                               size_t index,
                               double *lower,
                               double *upper,
                               int64_t *owner);

/**
 * Where the transport carried the owner of cell `index`.
 *
 * # Safety
 * `report` must be a live handle and `coords` must hold `d` doubles.
 */
enum AktStatus akt_report_carried_point(const struct AktReport *report,
                                        size_t index,
                                        double *coords);

/**
 * Target cell volume and the largest relative deviation of an owned cell.
 *
 * # Safety
 * `report` must be a live handle; both outputs must be writable.
 */
enum AktStatus akt_report_equipartition(const struct AktReport *report,
                                        double *target_volume,
                                        double *max_rel_error);

/**
 * Index of the cell owned by the origin.
 *
 * # Safety
 * `report` must be a live handle and `index` writable.
 */
enum AktStatus akt_report_origin_cell(const struct AktReport *report, size_t *index);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void akt_report_free(struct AktReport *report);

/**
 * `2 exp(-lambda rho^2 / 4)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum AktStatus akt_chernoff_bound(double lambda, double rho, double *out);

/**
 * Exact `P(|X - lambda| > lambda rho)` for `X ~ Poisson(lambda)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum AktStatus akt_poisson_two_sided_tail(double lambda, double rho, double *out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void akt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AKT_H */
