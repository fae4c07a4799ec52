#ifndef TRNI_H
#define TRNI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. The first four values match the CLI exit codes.
 */
typedef enum TrniStatus {
  /**
   * The property holds, or the call simply succeeded.
   */
  TRNI_STATUS_OK = 0,
  /**
   * The property is not established (type error or counterexample).
   */
  TRNI_STATUS_NOT_ESTABLISHED = 1,
  /**
   * Parse, policy or precondition error.
   */
  TRNI_STATUS_INVALID_INPUT = 2,
  /**
   * The oracle could not decide within its limits.
   */
  TRNI_STATUS_UNSUPPORTED = 3,
  /**
   * A required pointer argument was null.
   */
  TRNI_STATUS_NULL_ARGUMENT = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  TRNI_STATUS_INVALID_UTF8 = 5,
  /**
   * The library panicked; this is a bug.
   */
  TRNI_STATUS_INTERNAL = 6,
} TrniStatus;

/**
 * A validated policy together with its generated views.
 */
typedef struct TrniPolicy TrniPolicy;

/**
 * A parsed program.
 */
typedef struct TrniProgram TrniProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a policy. `name` may be null, in which case the
 * policy's own `policy` line or `"P"` names it.
 *
 * # Safety
 * `src` must be a nul-terminated string, `name` null or nul-terminated, and
 * `out` a valid pointer.
 */
enum TrniStatus trni_policy_parse(const char *src, const char *name, struct TrniPolicy **out);

/**
 * # Safety
 * `policy` must be null or a handle from [`trni_policy_parse`] not yet freed.
 */
void trni_policy_free(struct TrniPolicy *policy);

/**
 * # Safety
 * `src` must be nul-terminated and `out` a valid pointer.
 */
enum TrniStatus trni_program_parse(const char *src, struct TrniProgram **out);

/**
 * # Safety
 * `program` must be null or a handle from [`trni_program_parse`] not yet freed.
 */
void trni_program_free(struct TrniProgram *program);

/**
 * Typechecks `program` in the public view of `policy`. `at` may be null to
 * accept the inferred type. When `type_out` is not null it receives the
 * inferred type, if any.
 *
 * # Safety
 * Handles must be live; `at` null or nul-terminated; `type_out` null or valid.
 */
enum TrniStatus trni_check(const struct TrniPolicy *policy,
                           const struct TrniProgram *program,
                           const char *at,
                           char **type_out);

/**
 * Runs the enumeration oracle on the domain `[lo, hi]`. `observer` may be
 * null; for multi-level policies every observer is then checked. The JSON
 * report, when requested, has the same shape as the CLI's.
 *
 * # Safety
 * Handles must be live; `at` nul-terminated; `observer` null or
 * nul-terminated; `report_out` null or valid.
 */
enum TrniStatus trni_oracle(const struct TrniPolicy *policy,
                            const struct TrniProgram *program,
                            const char *at,
                            int64_t lo,
                            int64_t hi,
                            const char *observer,
                            char **report_out);

/**
 * Both views of `policy` as JSON.
 *
 * # Safety
 * `policy` must be live and `out` a valid pointer.
 */
enum TrniStatus trni_views_json(const struct TrniPolicy *policy, char **out);

/**
 * Typechecks and evaluates a closed program with at most `fuel` steps
 * (0 selects the default). `value_out` receives the printed value.
 *
 * # Safety
 * `program` must be live and `value_out` null or valid.
 */
enum TrniStatus trni_eval(const struct TrniProgram *program, uint64_t fuel, char **value_out);

/**
 * Message for the last failing call on this thread, or an empty string.
 * The pointer stays valid until the next call into the library on this
 * thread.
 */
const char *trni_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must be null or a string returned through a `char **` parameter of
 * this library that has not been freed.
 */
void trni_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRNI_H */
