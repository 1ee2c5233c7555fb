#ifndef MODEBI_H
#define MODEBI_H

/* Generated by cbindgen from the modebi-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes for every fallible call. `MODEBI_STATUS_OK` is zero; anything
 * else leaves a message retrievable via [`modebi_last_error_message`].
 */
typedef enum ModebiStatus {
  MODEBI_STATUS_OK = 0,
  MODEBI_STATUS_NULL_POINTER = 1,
  MODEBI_STATUS_INVALID_UTF8 = 2,
  MODEBI_STATUS_UNKNOWN_ALGORITHM = 3,
  MODEBI_STATUS_UNKNOWN_PROBLEM = 4,
  MODEBI_STATUS_INVALID_INPUT = 5,
  MODEBI_STATUS_BUDGET_TOO_SMALL = 6,
  MODEBI_STATUS_RUNTIME_ERROR = 7,
} ModebiStatus;

/**
 * Opaque problem handle.
 */
typedef struct ModebiProblem ModebiProblem;

/**
 * Opaque finished-run handle owning its serialized artifacts.
 */
typedef struct ModebiRun ModebiRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread; empty string
 * when no failure occurred. The pointer is valid until the next failing
 * call on the same thread.
 */
const char *modebi_last_error_message(void);

/**
 * Creates a builtin benchmark problem ("bnh", "toy-regulator").
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ModebiStatus modebi_problem_create_builtin(const char *name, struct ModebiProblem **out);

/**
 * Creates a problem from a JSON document; the document's name selects the
 * builtin evaluator while bounds, constraints and corners come from the
 * document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ModebiStatus modebi_problem_from_json(const char *json, struct ModebiProblem **out);

/**
 * Releases a problem handle. A null handle is a no-op.
 *
 * # Safety
 * `problem` must be null or a pointer from a `modebi_problem_*` constructor,
 * not freed before.
 */
void modebi_problem_free(struct ModebiProblem *problem);

/**
 * Runs an algorithm ("gde3", "modebi-s1", "modebi-s2", "modebi-s3") on the
 * problem. `config_json` overrides algorithm-configuration defaults and may
 * be null for the defaults; the budget must be set either way.
 *
 * # Safety
 * `problem` must be a live problem handle, `algo` a NUL-terminated string,
 * `config_json` null or NUL-terminated, and `out` a valid pointer.
 */
enum ModebiStatus modebi_run(const struct ModebiProblem *problem,
                             const char *algo,
                             const char *config_json,
                             struct ModebiRun **out);

/**
 * Run summary as JSON; valid until the run handle is freed.
 *
 * # Safety
 * `run` must be a live run handle.
 */
const char *modebi_run_summary_json(const struct ModebiRun *run);

/**
 * Per-epoch trajectory as CSV; valid until the run handle is freed.
 *
 * # Safety
 * `run` must be a live run handle.
 */
const char *modebi_run_runlog_csv(const struct ModebiRun *run);

/**
 * Final population (designs, responses, CV, objectives) as JSON; valid until
 * the run handle is freed.
 *
 * # Safety
 * `run` must be a live run handle.
 */
const char *modebi_run_population_json(const struct ModebiRun *run);

/**
 * Releases a run handle. A null handle is a no-op.
 *
 * # Safety
 * `run` must be null or a pointer from [`modebi_run`], not freed before.
 */
void modebi_run_free(struct ModebiRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MODEBI_H */
