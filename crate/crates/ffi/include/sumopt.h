#ifndef SUMOPT_H
#define SUMOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SUMOPT_LOSS_LOGISTIC = 0,
  SUMOPT_LOSS_SQUARED = 1,
} SumoptLoss;

typedef enum {
  SUMOPT_ORDERING_CYCLIC = 0,
  SUMOPT_ORDERING_PERMUTED = 1,
  SUMOPT_ORDERING_RANDOM = 2,
} SumoptOrdering;

/**
 * Result codes.
 */
typedef enum {
  SUMOPT_STATUS_OK = 0,
  SUMOPT_STATUS_NULL_POINTER = 1,
  SUMOPT_STATUS_INVALID_ARGUMENT = 2,
  SUMOPT_STATUS_DIMENSION_MISMATCH = 3,
  SUMOPT_STATUS_UNSUPPORTED = 4,
  SUMOPT_STATUS_NOT_STRONGLY_CONVEX = 5,
  SUMOPT_STATUS_HYPOTHESIS = 6,
  SUMOPT_STATUS_NO_CONVERGENCE = 7,
  SUMOPT_STATUS_IO = 8,
  SUMOPT_STATUS_NUMERICAL = 9,
  SUMOPT_STATUS_PANIC = 10,
} SumoptStatus;

/**
 * Synthetic problem families.
 */
typedef enum {
  SUMOPT_SYNTHETIC_RIDGE = 0,
  SUMOPT_SYNTHETIC_LOGISTIC = 1,
  SUMOPT_SYNTHETIC_WORST_CASE = 2,
} SumoptSynthetic;

/**
 * Opaque problem handle.
 */
typedef struct SumoptProblem SumoptProblem;

/**
 * Opaque solver handle. Keeps its problem alive.
 */
typedef struct SumoptSolver SumoptSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sumopt_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sumopt_last_error(char *buf, size_t len);

/**
 * Builds a seeded synthetic problem. For the worst-case instance `d` is
 * ignored and `l2` must be 0.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
SumoptStatus sumopt_problem_synthetic(SumoptSynthetic kind,
                                      size_t n,
                                      size_t d,
                                      double l2,
                                      uint64_t seed,
                                      SumoptProblem **out);

/**
 * Linear model from a row-major dense `n × d` matrix and `n` labels, with
 * ridge `l2` in every term and an optional `l1 ≥ 0` regularizer.
 *
 * # Safety
 * `features` must hold `n·d` values, `labels` `n` values; `out` must be valid.
 */
SumoptStatus sumopt_problem_dense(const double *features,
                                  const double *labels,
                                  size_t n,
                                  size_t d,
                                  SumoptLoss loss,
                                  double l2,
                                  double l1,
                                  SumoptProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from a `sumopt_problem_*` constructor.
 */
void sumopt_problem_free(SumoptProblem *p);

/**
 * Writes the number of terms and the dimension.
 *
 * # Safety
 * All pointers must be valid.
 */
SumoptStatus sumopt_problem_dims(const SumoptProblem *p, size_t *n, size_t *d);

/**
 * Full objective `F(x)` including the regularizer.
 *
 * # Safety
 * `x` must hold `len` values; `value` must be valid.
 */
SumoptStatus sumopt_problem_objective(const SumoptProblem *p,
                                      const double *x,
                                      size_t len,
                                      double *value);

/**
 * Creates a solver by method name (`"saga"`, `"finito"`, ...). A `step ≤ 0`
 * selects the default step for the method. `x0` may be null for zeros.
 *
 * # Safety
 * `method` must be a NUL-terminated string, `x0` null or `len` values.
 */
SumoptStatus sumopt_solver_new(const SumoptProblem *p,
                               const char *method,
                               double step,
                               const double *x0,
                               size_t len,
                               uint64_t seed,
                               SumoptSolver **out);

/**
 * # Safety
 * `s` must be null or a handle from [`sumopt_solver_new`].
 */
void sumopt_solver_free(SumoptSolver *s);

/**
 * One step on term `j` (0-based).
 *
 * # Safety
 * `s` must be a valid solver handle.
 */
SumoptStatus sumopt_solver_step(SumoptSolver *s, size_t j);

/**
 * `steps` steps with indices drawn from `ordering` seeded by `seed`.
 *
 * # Safety
 * `s` must be a valid solver handle.
 */
SumoptStatus sumopt_solver_run(SumoptSolver *s,
                               uint64_t steps,
                               SumoptOrdering ordering,
                               uint64_t seed);

/**
 * Copies the current iterate into `out` (`len` must equal the dimension).
 *
 * # Safety
 * `out` must point to `len` writable values.
 */
SumoptStatus sumopt_solver_iterate(const SumoptSolver *s, double *out, size_t len);

/**
 * Steps taken and gradient evaluations so far.
 *
 * # Safety
 * All pointers must be valid.
 */
SumoptStatus sumopt_solver_counts(const SumoptSolver *s, uint64_t *steps, uint64_t *evals);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUMOPT_H */
