#ifndef INFLAP_H
#define INFLAP_H

/* Generated by cbindgen; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum InflapStatus {
  INFLAP_STATUS_OK = 0,
  INFLAP_STATUS_NULL_POINTER = 1,
  INFLAP_STATUS_PARAMETER_DOMAIN = 2,
  INFLAP_STATUS_SINGULAR_POINT = 3,
  INFLAP_STATUS_GRID = 4,
  INFLAP_STATUS_NOT_INTERIOR = 5,
  INFLAP_STATUS_NON_CONVERGENCE = 6,
  INFLAP_STATUS_NON_FINITE = 7,
  INFLAP_STATUS_INSUFFICIENT_DATA = 8,
  INFLAP_STATUS_CONFIG = 9,
  INFLAP_STATUS_IO = 10,
  INFLAP_STATUS_INVALID_UTF8 = 11,
  INFLAP_STATUS_BUFFER_TOO_SMALL = 12,
  INFLAP_STATUS_PANIC = 13,
} InflapStatus;

/**
 * A solved nodal field together with the parameters it was solved at.
 */
typedef struct InflapField InflapField;

/**
 * Model parameters.
 */
typedef struct InflapParams InflapParams;

/**
 * A configured problem, parsed from a TOML run configuration.
 */
typedef struct InflapProblem InflapProblem;

/**
 * Derived constants of an [`InflapParams`].
 */
typedef struct InflapParamsInfo {
  double gamma;
  double epsilon;
  double delta;
  double alpha;
  double sigma;
  double c_alpha;
} InflapParamsInfo;

/**
 * Solver statistics.
 */
typedef struct InflapSolveInfo {
  uintptr_t iterations;
  double residual_sup;
  /**
   * Final ε (the last one of a continuation).
   */
  double epsilon;
} InflapSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full length including the
 * terminator. Pass `len = 0` to query the size.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null when `len` is 0.
 */
uintptr_t inflap_last_error_message(char *buf, uintptr_t len);

/**
 * Largest δ for which the barrier is a supersolution.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum InflapStatus inflap_max_admissible_delta(double gamma, double *out);

/**
 * Creates parameters; a non-positive or NaN `delta` selects the default.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`inflap_params_free`].
 */
enum InflapStatus inflap_params_new(double gamma,
                                    double epsilon,
                                    double delta,
                                    struct InflapParams **out);

/**
 * # Safety
 * `p` must come from [`inflap_params_new`] and not be used afterwards.
 */
void inflap_params_free(struct InflapParams *p);

/**
 * # Safety
 * Both pointers must be valid.
 */
enum InflapStatus inflap_params_info(const struct InflapParams *p, struct InflapParamsInfo *out);

/**
 * Penalized right-hand side at `s ≥ 0`.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum InflapStatus inflap_rhs(const struct InflapParams *p, double s, double *out);

/**
 * Exact radial solution `C_α (s+ε)^α`.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum InflapStatus inflap_radial_exact(const struct InflapParams *p, double s, double *out);

/**
 * Samples the barrier supersolution inequality at `samples` radii.
 *
 * # Safety
 * All pointers must be valid.
 */
enum InflapStatus inflap_barrier_verify(const struct InflapParams *p,
                                        double eta,
                                        uintptr_t samples,
                                        double *max_violation,
                                        int *passed);

/**
 * Parses a TOML run configuration (same format as the command-line tool).
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer; the
 * handle is released with [`inflap_problem_free`].
 */
enum InflapStatus inflap_problem_from_toml(const char *toml, struct InflapProblem **out);

/**
 * # Safety
 * `p` must come from [`inflap_problem_from_toml`] and not be used afterwards.
 */
void inflap_problem_free(struct InflapProblem *p);

/**
 * Solves the problem, running the ε-continuation when one is configured.
 *
 * # Safety
 * `problem` and `out` must be valid; `info` may be null. The field is
 * released with [`inflap_field_free`].
 */
enum InflapStatus inflap_solve(const struct InflapProblem *problem,
                               struct InflapField **out,
                               struct InflapSolveInfo *info);

/**
 * # Safety
 * `f` must come from [`inflap_solve`] and not be used afterwards.
 */
void inflap_field_free(struct InflapField *f);

/**
 * Number of nodes and spatial dimension.
 *
 * # Safety
 * All pointers must be valid.
 */
enum InflapStatus inflap_field_shape(const struct InflapField *f, uintptr_t *len, uintptr_t *dim);

/**
 * Copies the nodal values (grid order) into `buf`, which must hold at least
 * as many values as the field has nodes.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
enum InflapStatus inflap_field_values(const struct InflapField *f, double *buf, uintptr_t len);

/**
 * Coordinates of node `k`; `y` is 0 in 1D.
 *
 * # Safety
 * All pointers must be valid.
 */
enum InflapStatus inflap_field_coords(const struct InflapField *f,
                                      uintptr_t k,
                                      double *x,
                                      double *y);

/**
 * Growth exponent fitted at node `center` over dyadic radii in `[4h, R/2]`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum InflapStatus inflap_field_growth_exponent(const struct InflapField *f,
                                               uintptr_t center,
                                               double *alpha_est,
                                               double *r_squared);

/**
 * Smallest density ratio of the positivity set in balls of radius `kappa`
 * around the zero side of the free boundary.
 *
 * # Safety
 * All pointers must be valid.
 */
enum InflapStatus inflap_field_density_min(const struct InflapField *f, double kappa, double *out);

/**
 * `α = 4/(3+γ)` of the parameters the field was solved with.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum InflapStatus inflap_field_alpha(const struct InflapField *f, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFLAP_H */
