#ifndef QMOMENTS_H
#define QMOMENTS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define QM_OK 0

/**
 * The computation ran and failed; no result is produced.
 */
#define QM_ERR_RUN 1

/**
 * Invalid argument: null pointer, bad UTF-8, or unknown check name.
 */
#define QM_ERR_ARG 2

/**
 * Opaque handle to one inequality report.
 */
typedef struct QmReport QmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Run the named check ("ghz", "mermin-peres", "pentagon", "appendix-d",
 * "tsirelson", "cfrd-tri", "cfrd-quad") and store a new report handle in
 * `out`.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t qm_verify(const char *name, struct QmReport **out);

/**
 * Run the four-mode oscillator check on `len` amplitudes and store a new
 * report handle in `out`.
 *
 * # Safety
 * `z` must point to `len` readable doubles and `out` must be valid.
 */
int32_t qm_cfrd_fock(const double *z, uintptr_t len, struct QmReport **out);

/**
 * Left-hand side of the inequality.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
double qm_report_lhs(const struct QmReport *report);

/**
 * Right-hand side (the classical bound).
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
double qm_report_rhs(const struct QmReport *report);

/**
 * rhs - lhs; negative means violated.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
double qm_report_margin(const struct QmReport *report);

/**
 * 1 if the classical bound is broken, else 0.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
int32_t qm_report_violated(const struct QmReport *report);

/**
 * Copy of the report name; release with `qm_string_free`.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
char *qm_report_name(const struct QmReport *report);

/**
 * JSON rendering of the report; release with `qm_string_free`.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
char *qm_report_to_json(const struct QmReport *report);

/**
 * Release a report handle. Null is ignored.
 *
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void qm_report_free(struct QmReport *report);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void qm_string_free(char *s);

/**
 * Smallest eigenvalue of the oscillator moment matrix at `cutoff`, with
 * the unit eigenvector written to `vector` (length `cutoff + 1`).
 * `vector` may be null if only the eigenvalue is wanted.
 *
 * # Safety
 * `lambda_min` must be valid; `vector` must be null or hold `cutoff + 1`
 * writable doubles.
 */
int32_t qm_min_eigenpair(uintptr_t cutoff, double *lambda_min, double *vector);

/**
 * Exact integer determinant of 4M at `cutoff`, as a decimal string;
 * release with `qm_string_free`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t qm_det4m(uintptr_t cutoff, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMOMENTS_H */
