#ifndef SB_KIT_H
#define SB_KIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_UTF8 = 2,
  SB_STATUS_PARSE_ERROR = 3,
  SB_STATUS_VALIDATION_ERROR = 4,
  SB_STATUS_MODULE_ERROR = 5,
  SB_STATUS_INTERNAL_ERROR = 6,
  SB_STATUS_PANIC = 7,
} SbStatus;

/**
 * A validated job, as read by `sb-kit run`.
 */
typedef struct SbJob SbJob;

/**
 * A real symmetric matrix.
 */
typedef struct SbOperator SbOperator;

/**
 * A real orthogonal matrix.
 */
typedef struct SbOrthogonalMap SbOrthogonalMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or null. The caller
 * owns the returned string.
 */
char *sb_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sb_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sb_version(void);

/**
 * Builds an operator from `dim * dim` row-major entries.
 *
 * # Safety
 * `entries` must point to `dim * dim` doubles and `out` must be writable.
 */
enum SbStatus sb_operator_new(const double *entries, size_t dim, struct SbOperator **out);

/**
 * Builds an operator from `{"dim": n, "rows": [...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum SbStatus sb_operator_from_json(const char *json, struct SbOperator **out);

/**
 * # Safety
 * `op` must be null or a live handle from this library.
 */
void sb_operator_free(struct SbOperator *op);

/**
 * # Safety
 * `op` must be a live handle.
 */
size_t sb_operator_dim(const struct SbOperator *op);

/**
 * Orthogonal `U` with `‖U·a·Uᵀ − b‖ < epsilon`, when `a` and `b` have the
 * same spectral description.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` writable.
 */
enum SbStatus sb_approximate_unitary(const struct SbOperator *a,
                                     const struct SbOperator *b,
                                     double epsilon,
                                     struct SbOrthogonalMap **out);

/**
 * Operator norm of `U·a·Uᵀ − b`.
 *
 * # Safety
 * All handles must be live and `out` writable.
 */
enum SbStatus sb_conjugation_residual(const struct SbOperator *a,
                                      const struct SbOperator *b,
                                      const struct SbOrthogonalMap *u,
                                      double *out);

/**
 * # Safety
 * `u` must be null or a live handle.
 */
void sb_orthogonal_map_free(struct SbOrthogonalMap *u);

/**
 * # Safety
 * `u` must be a live handle.
 */
size_t sb_orthogonal_map_dim(const struct SbOrthogonalMap *u);

/**
 * Copies the `dim * dim` row-major entries into `out`, which holds `len`
 * doubles.
 *
 * # Safety
 * `u` must be a live handle and `out` must hold `len` doubles.
 */
enum SbStatus sb_orthogonal_map_entries(const struct SbOrthogonalMap *u, double *out, size_t len);

/**
 * Parses and validates a job file's contents.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum SbStatus sb_job_parse(const char *json, struct SbJob **out);

/**
 * # Safety
 * `job` must be null or a live handle.
 */
void sb_job_free(struct SbJob *job);

/**
 * Runs the job. On success `cert_out` receives the certificate as JSON and
 * `positive_out` is set to true for equivalence verdicts.
 *
 * # Safety
 * `job` must be a live handle; the out pointers must be writable.
 */
enum SbStatus sb_job_run(const struct SbJob *job, char **cert_out, bool *positive_out);

/**
 * Checks a certificate against a job. A certificate that cannot be read
 * is a parse error; one that reads but does not hold sets `valid_out` to
 * false and leaves the reason as the last error message.
 *
 * # Safety
 * `job` must be a live handle, `cert` a NUL-terminated string and
 * `valid_out` writable.
 */
enum SbStatus sb_certificate_verify(const struct SbJob *job, const char *cert, bool *valid_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SB_KIT_H */
