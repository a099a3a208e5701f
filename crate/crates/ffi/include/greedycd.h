#ifndef GREEDYCD_H
#define GREEDYCD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GcdBackend {
  GCD_BACKEND_HEAP = 0,
  GCD_BACKEND_SCAN = 1,
  GCD_BACKEND_NNS = 2,
} GcdBackend;

// Result code of every fallible call.
typedef enum GcdStatus {
  GCD_STATUS_OK = 0,
  GCD_STATUS_NULL_POINTER = 1,
  GCD_STATUS_INVALID_ARGUMENT = 2,
  GCD_STATUS_DIMENSION_MISMATCH = 3,
  GCD_STATUS_NON_FINITE = 4,
  // Rule, step and problem do not define a method.
  GCD_STATUS_INCOMPATIBLE = 5,
  // A progress bound or internal check failed during a run.
  GCD_STATUS_CHECK_FAILED = 6,
  GCD_STATUS_IO = 7,
  GCD_STATUS_PARSE = 8,
  GCD_STATUS_BUFFER_TOO_SMALL = 9,
  GCD_STATUS_PANIC = 10,
} GcdStatus;

typedef enum GcdRunStatus {
  GCD_RUN_STATUS_CONVERGED = 0,
  GCD_RUN_STATUS_MAX_ITERS = 1,
  GCD_RUN_STATUS_DIVERGED = 2,
} GcdRunStatus;

// Problem handle with its default starting point.
typedef struct GcdProblem GcdProblem;

typedef struct GcdRace GcdRace;

typedef struct GcdTrace GcdTrace;

// Run settings. Obtain defaults from [`gcd_run_options_default`].
typedef struct GcdRunOptions {
  // Iteration cap; ignored (library default `50n`) when `default_max_iters`.
  uint64_t max_iters;
  bool default_max_iters;
  double tol;
  // Seed for randomized rules; the master seed for races.
  uint64_t seed;
  enum GcdBackend backend;
  // Fail with `CheckFailed` if a per-iteration progress bound is violated.
  bool check_bounds;
  // Constant error level for the approximate rules.
  double eps;
} GcdRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until
// the next `gcd_*` call on the same thread.
const char *gcd_last_error(void);

// Static NUL-terminated version string.
const char *gcd_version(void);

struct GcdRunOptions gcd_run_options_default(void);

// Loads a problem manifest (JSON). The default start is the manifest's
// `x0`, or zero.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum GcdStatus gcd_problem_from_manifest(const char *path, struct GcdProblem **out);

// Generates a synthetic experiment instance. `kind` is one of `sparse_ls`,
// `sparse_logistic`, `dense_overdet_ls`, `l1_underdet_ls`, `two_moons`;
// `m = 0` for `two_moons`.
//
// # Safety
// `kind` must be a NUL-terminated string; `out` must be writable.
enum GcdStatus gcd_problem_generate(const char *kind,
                                    size_t m,
                                    size_t n,
                                    double lambda,
                                    uint64_t seed,
                                    struct GcdProblem **out);

// `½xᵀHx + cᵀx`, `h` row-major `n×n` symmetric.
//
// # Safety
// `h` must hold `n·n` doubles and `c` `n`; `out` must be writable.
enum GcdStatus gcd_problem_dense_quadratic(size_t n,
                                           const double *h,
                                           const double *c,
                                           struct GcdProblem **out);

// `1/(2m)‖Ax − b‖² + (l2/2)‖x‖² + l1‖x‖₁` from a row-major dense `A`.
// `l1 = 0` gives a smooth problem.
//
// # Safety
// `a` must hold `m·n` doubles and `b` `m`; `out` must be writable.
enum GcdStatus gcd_problem_least_squares(size_t m,
                                         size_t n,
                                         const double *a,
                                         const double *b,
                                         double l2,
                                         double l1,
                                         struct GcdProblem **out);

// # Safety
// `p` must be NULL or a live problem handle; it is invalid afterwards.
void gcd_problem_free(struct GcdProblem *p);

// Dimension, or 0 for NULL.
//
// # Safety
// `p` must be NULL or a live problem handle.
size_t gcd_problem_dim(const struct GcdProblem *p);

// # Safety
// `p` must be NULL or a live problem handle.
bool gcd_problem_is_composite(const struct GcdProblem *p);

// Objective `F(x)`.
//
// # Safety
// `x` must hold `n` doubles; `out` must be writable.
enum GcdStatus gcd_problem_value(const struct GcdProblem *p,
                                 const double *x,
                                 size_t n,
                                 double *out);

// Default starting point.
//
// # Safety
// `out` must be NULL or hold `cap` doubles; `written` must be writable.
enum GcdStatus gcd_problem_x0(const struct GcdProblem *p, double *out, size_t cap, size_t *written);

// Runs one rule. `step` may be NULL or empty for the rule's default
// strategy; `x0` may be NULL for the problem's default start.
//
// # Safety
// Strings must be NUL-terminated; `x0` must be NULL or hold `n` doubles;
// `opts` must point to a valid struct; `out` must be writable.
enum GcdStatus gcd_run(const struct GcdProblem *p,
                       const char *rule,
                       const char *step,
                       const double *x0,
                       size_t n,
                       const struct GcdRunOptions *opts,
                       struct GcdTrace **out);

// Races comma-separated `rules` (each with its default step) from the same
// start, on independent streams of `opts.seed`.
//
// # Safety
// As for [`gcd_run`].
enum GcdStatus gcd_race(const struct GcdProblem *p,
                        const char *rules,
                        const double *x0,
                        size_t n,
                        const struct GcdRunOptions *opts,
                        struct GcdRace **out);

// # Safety
// `r` must be NULL or a live race handle.
size_t gcd_race_len(const struct GcdRace *r);

// Borrowed trace `j`, owned by the race; NULL if out of range.
//
// # Safety
// `r` must be NULL or a live race handle. Do not free the result.
const struct GcdTrace *gcd_race_trace(const struct GcdRace *r, size_t j);

// # Safety
// `r` must be NULL or a live race handle; it and its traces are invalid afterwards.
void gcd_race_free(struct GcdRace *r);

// # Safety
// `t` must be NULL or a trace returned by [`gcd_run`]; it is invalid afterwards.
void gcd_trace_free(struct GcdTrace *t);

// Number of rows (iterations + 1), or 0 for NULL.
//
// # Safety
// `t` must be NULL or a live trace.
size_t gcd_trace_len(const struct GcdTrace *t);

// # Safety
// `t` must be NULL or a live trace; `out` must be writable.
enum GcdStatus gcd_trace_status(const struct GcdTrace *t, enum GcdRunStatus *out);

// Objective per row.
//
// # Safety
// `out` must be NULL or hold `cap` doubles; `written` must be writable.
enum GcdStatus gcd_trace_objectives(const struct GcdTrace *t,
                                    double *out,
                                    size_t cap,
                                    size_t *written);

// Selected coordinate per row; row 0 (the start) is -1.
//
// # Safety
// `out` must be NULL or hold `cap` values; `written` must be writable.
enum GcdStatus gcd_trace_coords(const struct GcdTrace *t,
                                int64_t *out,
                                size_t cap,
                                size_t *written);

// Final iterate.
//
// # Safety
// `out` must be NULL or hold `cap` doubles; `written` must be writable.
enum GcdStatus gcd_trace_x(const struct GcdTrace *t, double *out, size_t cap, size_t *written);

// Writes the trace as CSV.
//
// # Safety
// `t` must be a live trace and `path` a NUL-terminated string.
enum GcdStatus gcd_trace_write_csv(const struct GcdTrace *t, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GREEDYCD_H */
