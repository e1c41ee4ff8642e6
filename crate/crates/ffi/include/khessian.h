#ifndef KHESSIAN_H
#define KHESSIAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum KhStatus {
  KH_STATUS_OK = 0,
  KH_STATUS_NULL_POINTER = 1,
  /**
   * `(n, k)` or another parameter outside its domain.
   */
  KH_STATUS_PARAM_DOMAIN = 2,
  KH_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A caller buffer is shorter than the data.
   */
  KH_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * Iteration failed to converge or a tolerance was missed.
   */
  KH_STATUS_NUMERICAL = 5,
  /**
   * Internal invariant breach; please report.
   */
  KH_STATUS_INVARIANT = 6,
  KH_STATUS_PANIC = 7,
} KhStatus;

/**
 * One member of the k-Barenblatt family.
 */
typedef struct KhBarenblatt KhBarenblatt;

/**
 * Problem dimension, order and derived constants.
 */
typedef struct KhParams KhParams;

/**
 * Stationary profile sampled on a uniform grid over a ball.
 */
typedef struct KhStationary KhStationary;

/**
 * Summary of a stationary solve.
 */
typedef struct KhStationaryInfo {
  double residual;
  double sup_norm;
  double center_value;
  double boundary_slope;
  /**
   * Zero of the unit shot before rescaling.
   */
  double crossing_radius;
  double ball_bound;
  double torsion_bound;
  bool bounds_satisfied;
} KhStationaryInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, including the
 * terminating NUL; 0 when there is none.
 */
size_t kh_last_error_length(void);

/**
 * Copies the last error message (NUL-terminated, truncated to `len`) into
 * `buf`. Returns the full length including the NUL, or 0 if there is none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t kh_last_error_message(char *buf, size_t len);

/**
 * Validates `(n, k)` and stores a new handle in `*out`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum KhStatus kh_params_new(size_t n, size_t k, struct KhParams **out);

/**
 * # Safety
 * `p` must be null or a handle from [`kh_params_new`] not yet freed.
 */
void kh_params_free(struct KhParams *p);

/**
 * `binom(n, k) / n`, `alpha` and `beta` of the similarity scaling.
 *
 * # Safety
 * `p` must be a live handle; each output must be null (skipped) or writable.
 */
enum KhStatus kh_params_constants(const struct KhParams *p,
                                  double *c_nk,
                                  double *alpha,
                                  double *beta);

/**
 * Applies the discrete radial `S_k` to `values[0..=cells]` on a ball of
 * radius `radius`, writing `cells + 1` entries to `out`.
 *
 * # Safety
 * `values` and `out` must each hold `cells + 1` doubles.
 */
enum KhStatus kh_apply_sk_radial(const struct KhParams *p,
                                 double radius,
                                 size_t cells,
                                 const double *values,
                                 double *out);

/**
 * Shoots the stationary profile and rescales it onto the ball of radius
 * `radius` with `cells` cells.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for a pointer write.
 */
enum KhStatus kh_stationary_solve(const struct KhParams *p,
                                  double radius,
                                  size_t cells,
                                  size_t ode_steps,
                                  struct KhStationary **out);

/**
 * # Safety
 * `s` must be null or a handle from [`kh_stationary_solve`] not yet freed.
 */
void kh_stationary_free(struct KhStationary *s);

/**
 * Number of grid nodes (`cells + 1`).
 *
 * # Safety
 * `s` must be a live handle and `len` writable.
 */
enum KhStatus kh_stationary_len(const struct KhStationary *s, size_t *len);

/**
 * Copies node radii and profile values. `r` may be null.
 *
 * # Safety
 * `theta` (and `r` if non-null) must hold `len` doubles.
 */
enum KhStatus kh_stationary_profile(const struct KhStationary *s,
                                    double *r,
                                    double *theta,
                                    size_t len);

/**
 * # Safety
 * `s` must be a live handle and `info` writable.
 */
enum KhStatus kh_stationary_info(const struct KhStationary *s, struct KhStationaryInfo *info);

/**
 * Family member with profile constant `c`.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for a pointer write.
 */
enum KhStatus kh_barenblatt_new(const struct KhParams *p, double c, struct KhBarenblatt **out);

/**
 * Family member carrying total mass `mass`.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for a pointer write.
 */
enum KhStatus kh_barenblatt_from_mass(const struct KhParams *p,
                                      double mass,
                                      struct KhBarenblatt **out);

/**
 * # Safety
 * `b` must be null or a live Barenblatt handle.
 */
void kh_barenblatt_free(struct KhBarenblatt *b);

/**
 * Profile constant, closed-form mass and `r0`; outputs may be null.
 *
 * # Safety
 * `b` must be a live handle.
 */
enum KhStatus kh_barenblatt_constants(const struct KhBarenblatt *b,
                                      double *c,
                                      double *mass,
                                      double *r0);

/**
 * `U(t, r)`.
 *
 * # Safety
 * `b` must be a live handle and `out` writable.
 */
enum KhStatus kh_barenblatt_value(const struct KhBarenblatt *b, double t, double r, double *out);

/**
 * Radius of the support at time `t`.
 *
 * # Safety
 * `b` must be a live handle and `out` writable.
 */
enum KhStatus kh_barenblatt_support_radius(const struct KhBarenblatt *b, double t, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KHESSIAN_H */
