#ifndef S1AVG_H
#define S1AVG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum S1Status {
  S1_STATUS_OK = 0,
  S1_STATUS_NULL_POINTER = 1,
  S1_STATUS_INVALID_ARGUMENT = 2,
  S1_STATUS_CONFIG = 3,
  S1_STATUS_SYNTAX = 4,
  S1_STATUS_NUMERICAL = 5,
  S1_STATUS_DOMAIN_EXIT = 6,
  S1_STATUS_IO = 7,
  S1_STATUS_PANIC = 8,
} S1Status;

/**
 * A validated system configuration.
 */
typedef struct S1Config S1Config;

/**
 * A parsed expression.
 */
typedef struct S1Expr S1Expr;

/**
 * Result of an averaging-error sweep.
 */
typedef struct S1Sweep S1Sweep;

/**
 * One row of a sweep.
 */
typedef struct S1SweepRow {
  double epsilon;
  double sup_error;
  double c_eps_bound;
  double term1;
  double term2;
  double wall_ms;
} S1SweepRow;

/**
 * Constants of the error estimate.
 */
typedef struct S1Constants {
  double kappa0;
  double kappa1;
  double kappa2;
  double c;
  double epsilon0;
  double l0;
} S1Constants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread (empty after a success).
 * The pointer stays valid until the next call into this library.
 */
const char *s1avg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *s1avg_version(void);

/**
 * Loads and validates a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum S1Status s1avg_config_load(const char *path, struct S1Config **out);

/**
 * Parses and validates configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum S1Status s1avg_config_parse(const char *text, struct S1Config **out);

/**
 * Number of coordinates of a point on the configured manifold.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_config_dim(const struct S1Config *cfg, size_t *out);

/**
 * # Safety
 * `cfg` must come from this library (or be null) and not be used again.
 */
void s1avg_config_free(struct S1Config *cfg);

/**
 * Runs the averaging-error sweep of the configuration.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_verify(const struct S1Config *cfg, struct S1Sweep **out);

/**
 * # Safety
 * `sweep` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_sweep_len(const struct S1Sweep *sweep, size_t *out);

/**
 * Row `index` in ascending `epsilon` order.
 *
 * # Safety
 * `sweep` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_sweep_row(const struct S1Sweep *sweep, size_t index, struct S1SweepRow *out);

/**
 * Log–log slope of the error against `epsilon`.
 *
 * # Safety
 * `sweep` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_sweep_slope(const struct S1Sweep *sweep, double *out);

/**
 * # Safety
 * `sweep` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_sweep_constants(const struct S1Sweep *sweep, struct S1Constants *out);

/**
 * Writes 1 to `out` when every asserted inequality held, 0 otherwise.
 *
 * # Safety
 * `sweep` must come from this library; `out` must be valid.
 */
enum S1Status s1avg_sweep_passed(const struct S1Sweep *sweep, int32_t *out);

/**
 * Writes the sweep as CSV; with `timings == 0` the `wall_ms` column is zero.
 *
 * # Safety
 * `sweep` must come from this library; `path` must be NUL-terminated.
 */
enum S1Status s1avg_sweep_write_csv(const struct S1Sweep *sweep, const char *path, int32_t timings);

/**
 * # Safety
 * `sweep` must come from this library (or be null) and not be used again.
 */
void s1avg_sweep_free(struct S1Sweep *sweep);

/**
 * `(δ₂/δ₁ + δ₃) e^{δ₁(t − t₀)} − δ₂/δ₁`.
 *
 * # Safety
 * `out` must be valid.
 */
enum S1Status s1avg_gronwall_bound(double delta1,
                                   double delta2,
                                   double delta3,
                                   double t0,
                                   double t,
                                   double *out);

/**
 * `(C₂/C₁ + L(0)) e^{C₁t} − C₂/C₁`.
 *
 * # Safety
 * `out` must be valid.
 */
enum S1Status s1avg_surface_length_bound(double c1,
                                         double c2,
                                         double l_init,
                                         double t,
                                         double *out);

/**
 * Parses an expression.
 *
 * # Safety
 * `src` must be NUL-terminated and `out` valid.
 */
enum S1Status s1avg_expr_parse(const char *src, struct S1Expr **out);

/**
 * Evaluates with `count` bindings `names[i] = values[i]`. `non_finite`
 * (may be null) receives 1 when the value or an intermediate is not finite.
 *
 * # Safety
 * `names` and `values` must hold `count` entries; `out` must be valid.
 */
enum S1Status s1avg_expr_eval(const struct S1Expr *expr,
                              const char *const *names,
                              const double *values,
                              size_t count,
                              double *out,
                              int32_t *non_finite);

/**
 * # Safety
 * `expr` must come from this library (or be null) and not be used again.
 */
void s1avg_expr_free(struct S1Expr *expr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* S1AVG_H */
