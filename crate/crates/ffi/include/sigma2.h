#ifndef SIGMA2_H
#define SIGMA2_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Sigma2Status {
  SIGMA2_STATUS_OK = 0,
  SIGMA2_STATUS_NULL_POINTER = 1,
  SIGMA2_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed metric document or expression.
   */
  SIGMA2_STATUS_PARSE = 3,
  SIGMA2_STATUS_UNKNOWN_METRIC = 4,
  /**
   * Point outside the chart's domain, or a degenerate metric there.
   */
  SIGMA2_STATUS_DOMAIN = 5,
  SIGMA2_STATUS_INVALID_ARGUMENT = 6,
  /**
   * The flow could not find a descent step. The handle keeps the last
   * accepted state.
   */
  SIGMA2_STATUS_STALLED = 7,
  /**
   * A flow step left the positive-definite region.
   */
  SIGMA2_STATUS_DEGENERATE = 8,
  SIGMA2_STATUS_PANIC = 9,
} Sigma2Status;

/**
 * A parsed metric chart.
 */
typedef struct Sigma2Chart Sigma2Chart;

/**
 * A metric on a periodic grid together with its trajectory so far.
 */
typedef struct Sigma2Flow Sigma2Flow;

/**
 * Residuals of the critical-point equations at one point.
 */
typedef struct Sigma2Residuals {
  double scalar_curvature;
  double grad_ft_norm;
  double eq1_norm;
  double eq2_value;
  double weitzenbock_residual;
  double pde_residual;
  double cor34_slack;
} Sigma2Residuals;

typedef struct Sigma2TrajectoryRow {
  size_t step;
  double energy;
  double grad_norm;
  double max_abs_ric;
  double max_neg_r;
} Sigma2TrajectoryRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *sigma2_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sigma2_version(void);

/**
 * Looks up a catalog metric (`flat`, `round_sphere`, `gv_example`,
 * `warped_template:<expr>`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Sigma2Status sigma2_chart_from_catalog(const char *name, struct Sigma2Chart **out);

/**
 * Parses a metric document (`key = "expression"` lines).
 *
 * # Safety
 * `document` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Sigma2Status sigma2_chart_from_document(const char *document, struct Sigma2Chart **out);

/**
 * # Safety
 * `chart` must come from this library and not be used afterwards. Null is
 * accepted.
 */
void sigma2_chart_free(struct Sigma2Chart *chart);

/**
 * Scalar curvature at `point_xyz` (three doubles).
 *
 * # Safety
 * `chart` must be a live handle, `point_xyz` must hold three doubles and `out`
 * must be valid for writes.
 */
enum Sigma2Status sigma2_scalar_curvature(const struct Sigma2Chart *chart,
                                          const double *point_xyz,
                                          double *out);

/**
 * All residuals at `point_xyz` for the coupling `t`.
 *
 * # Safety
 * As for [`sigma2_scalar_curvature`].
 */
enum Sigma2Status sigma2_residuals(const struct Sigma2Chart *chart,
                                   const double *point_xyz,
                                   double t,
                                   struct Sigma2Residuals *out);

/**
 * Runs the identity suite and stores 1 in `passed` if every check passed.
 *
 * # Safety
 * `passed` must be valid for writes.
 */
enum Sigma2Status sigma2_run_identities(uint64_t seed,
                                        size_t matrix_trials,
                                        size_t chart_trials,
                                        int32_t *passed);

/**
 * A randomly perturbed flat metric on an `n³` grid.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum Sigma2Status sigma2_flow_new(size_t n,
                                  double amplitude,
                                  uint64_t seed,
                                  double t,
                                  struct Sigma2Flow **out);

/**
 * # Safety
 * `flow` must come from this library and not be used afterwards. Null is
 * accepted.
 */
void sigma2_flow_free(struct Sigma2Flow *flow);

/**
 * Takes up to `max_steps` descent steps, stopping early once the gradient
 * norm is at most `target_grad_norm`. Rows are appended to the handle's
 * trajectory. On `SIGMA2_STATUS_STALLED` the handle holds the last
 * accepted state.
 *
 * # Safety
 * `flow` must be a live handle.
 */
enum Sigma2Status sigma2_flow_run(struct Sigma2Flow *flow,
                                  size_t max_steps,
                                  double target_grad_norm,
                                  double eta);

/**
 * Discrete energy of the current state.
 *
 * # Safety
 * `flow` must be a live handle and `out` valid for writes.
 */
enum Sigma2Status sigma2_flow_energy(const struct Sigma2Flow *flow, double *out);

/**
 * Number of accepted steps so far. Returns 0 for a null handle.
 *
 * # Safety
 * `flow` must be a live handle or null.
 */
size_t sigma2_flow_steps(const struct Sigma2Flow *flow);

/**
 * Number of trajectory rows recorded. Returns 0 for a null handle.
 *
 * # Safety
 * `flow` must be a live handle or null.
 */
size_t sigma2_flow_trajectory_len(const struct Sigma2Flow *flow);

/**
 * # Safety
 * `flow` must be a live handle and `out` valid for writes.
 */
enum Sigma2Status sigma2_flow_trajectory_row(const struct Sigma2Flow *flow,
                                             size_t index,
                                             struct Sigma2TrajectoryRow *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGMA2_H */
