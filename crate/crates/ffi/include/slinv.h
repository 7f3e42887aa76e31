#ifndef SLINV_H
#define SLINV_H

/* Generated by cbindgen from the slinv-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of one call. Anything other than `Ok` leaves a description in
 * `slinv_last_error_message` for the calling thread.
 */
typedef enum SlinvStatus {
  SLINV_STATUS_OK = 0,
  /**
   * The computation ran, and the mathematical verdict came out false.
   */
  SLINV_STATUS_VERDICT_FAILED = 1,
  /**
   * Malformed descriptor, level, or argument.
   */
  SLINV_STATUS_BAD_INPUT = 2,
  /**
   * An enumeration or dimension cap was exceeded.
   */
  SLINV_STATUS_CAP_EXCEEDED = 3,
  /**
   * Invariant violated inside the library; report it.
   */
  SLINV_STATUS_INTERNAL = 4,
  /**
   * A required pointer argument was null.
   */
  SLINV_STATUS_NULL_ARGUMENT = 5,
} SlinvStatus;

/**
 * Opaque unitary representation handle.
 */
typedef struct SlinvRep SlinvRep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Tool version as a static nul-terminated string.
 */
const char *slinv_version(void);

/**
 * Message for the most recent failure on this thread; empty string when the
 * last call succeeded. Valid until the next library call on the thread.
 */
const char *slinv_last_error_message(void);

/**
 * Free a string returned by this library. Null is ignored.
 */
void slinv_string_free(char *s);

/**
 * Build a representation from its JSON descriptor, e.g.
 * `{"type":"perm","space":"nonzero:Z2^4","level":2}`. On success writes a
 * handle the caller must release with `slinv_rep_free`.
 */
enum SlinvStatus slinv_rep_from_descriptor(const char *descriptor,
                                           size_t cap,
                                           struct SlinvRep **out);

/**
 * Release a representation handle. Null is ignored.
 */
void slinv_rep_free(struct SlinvRep *rep);

/**
 * Dimension of the representation space; 0 for a null handle.
 */
size_t slinv_rep_dim(const struct SlinvRep *rep);

/**
 * Congruence level N of the representation; 0 for a null handle.
 */
uint32_t slinv_rep_level(const struct SlinvRep *rep);

/**
 * Largest eigenvalue of rho(S) + rho(S)* + rho(T) + rho(T)* over the
 * embedded upper-left SL2.
 */
enum SlinvStatus slinv_rep_norm(const struct SlinvRep *rep, double *out);

/**
 * Construct a block-invariant vector for the representation and write the
 * witness report as JSON (fields: level, rep, step1, case, dimW, residual,
 * fallback, ...). Free the string with `slinv_string_free`.
 */
enum SlinvStatus slinv_pipeline_run(const struct SlinvRep *rep, char **witness_json);

/**
 * Restriction multiplicities of every irreducible of SL4(Z/level) to the
 * upper-left SL2 block, as a JSON report. `Ok` means every multiplicity is
 * at least 1; `VerdictFailed` means some irreducible has none (the report
 * is still written).
 */
enum SlinvStatus slinv_verify_level(uint32_t level, size_t cap, uint64_t seed, char **report_json);

/**
 * Search SL3(Z/p) for irreducibles without block-invariant vectors. `Ok`
 * means at least one was found; `VerdictFailed` means none exists.
 */
enum SlinvStatus slinv_counterexample_search(uint32_t p,
                                             size_t cap,
                                             uint64_t seed,
                                             char **report_json);

/**
 * Exact trace moments a_n of z = S + S^-1 + T + T^-1 with their norm lower
 * bounds b_n, as JSON `{"a": [...], "b": [...]}` for n = 1..n_max.
 */
enum SlinvStatus slinv_moments(size_t n_max, char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLINV_H */
