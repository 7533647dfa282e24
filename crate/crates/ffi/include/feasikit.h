#ifndef FEASIKIT_H
#define FEASIKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum FkStatus {
  FK_STATUS_OK = 0,
  FK_STATUS_NULL_POINTER = 1,
  FK_STATUS_INVALID_UTF8 = 2,
  FK_STATUS_PARSE_ERROR = 3,
  FK_STATUS_VALIDATION_ERROR = 4,
  FK_STATUS_PRECONDITION_VIOLATION = 5,
  FK_STATUS_INVALID_INPUT = 6,
  FK_STATUS_NUMERICAL_FAILURE = 7,
  FK_STATUS_IO_ERROR = 8,
  FK_STATUS_BUFFER_TOO_SMALL = 9,
  FK_STATUS_PANIC = 10,
} FkStatus;

// Termination status of a run.
typedef enum FkRunStatus {
  FK_RUN_STATUS_FINITE_CONVERGENCE = 0,
  FK_RUN_STATUS_TOL_REACHED = 1,
  FK_RUN_STATUS_BUDGET_EXHAUSTED = 2,
} FkRunStatus;

// A validated experiment ready to run.
typedef struct FkExperiment FkExperiment;

// The result of running an experiment.
typedef struct FkTrace FkTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fk_version(void);

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *fk_last_error_message(void);

// Parses a single-experiment JSON config, runs the generator if any, and
// checks the preconditions of the configured mode.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum FkStatus fk_experiment_from_json(const char *json, struct FkExperiment **out);

// # Safety
// `exp` must come from [`fk_experiment_from_json`] or be NULL.
void fk_experiment_free(struct FkExperiment *exp);

// Ambient dimension, or 0 for a NULL handle.
//
// # Safety
// `exp` must be a live handle or NULL.
size_t fk_experiment_dim(const struct FkExperiment *exp);

// Number of constraints, or 0 for a NULL handle.
//
// # Safety
// `exp` must be a live handle or NULL.
size_t fk_experiment_num_constraints(const struct FkExperiment *exp);

// Runs the solver. Nothing is written to disk.
//
// # Safety
// `exp` must be a live handle and `out` a valid pointer.
enum FkStatus fk_experiment_run(const struct FkExperiment *exp, struct FkTrace **out);

// # Safety
// `trace` must come from [`fk_experiment_run`] or be NULL.
void fk_trace_free(struct FkTrace *trace);

// # Safety
// `trace` must be a live handle; `status` and `k` valid pointers (`k` may be
// NULL). `k` receives the stopping index, or the step count when the budget
// ran out.
enum FkStatus fk_trace_status(const struct FkTrace *trace, enum FkRunStatus *status, size_t *k);

// Number of steps taken, or 0 for a NULL handle.
//
// # Safety
// `trace` must be a live handle or NULL.
size_t fk_trace_iterations(const struct FkTrace *trace);

// `max_i d(x_last, C_i)`, or NaN for a NULL handle.
//
// # Safety
// `trace` must be a live handle or NULL.
double fk_trace_final_residual(const struct FkTrace *trace);

// Copies the final iterate into `buf`, which must hold at least `len`
// doubles. Fails with `BUFFER_TOO_SMALL` when `len` is below the dimension.
//
// # Safety
// `trace` must be a live handle and `buf` valid for `len` writes.
enum FkStatus fk_trace_final_point(const struct FkTrace *trace, double *buf, size_t len);

// Writes the trace CSV to `path`.
//
// # Safety
// `trace` must be a live handle and `path` a NUL-terminated string.
enum FkStatus fk_trace_write_csv(const struct FkTrace *trace, const char *path);

// Run summary (status, diagnostics verdicts, final point) as a JSON string.
// Release it with [`fk_string_free`].
//
// # Safety
// `trace` must be a live handle and `out` a valid pointer.
enum FkStatus fk_trace_summary_json(const struct FkTrace *trace, char **out);

// # Safety
// `s` must come from this library or be NULL.
void fk_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEASIKIT_H */
