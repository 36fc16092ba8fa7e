#ifndef PDECONT_H
#define PDECONT_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; `PDC_STATUS_OK` is zero.
 */
typedef enum PdcStatus {
  PDC_STATUS_OK = 0,
  PDC_STATUS_NULL_POINTER = 1,
  PDC_STATUS_INVALID_UTF8 = 2,
  PDC_STATUS_BUFFER_TOO_SMALL = 3,
  PDC_STATUS_DOMAIN = 4,
  PDC_STATUS_DIMENSION = 5,
  PDC_STATUS_SINGULAR = 6,
  PDC_STATUS_NOT_CONVERGED = 7,
  PDC_STATUS_UNKNOWN_DEMO = 8,
  PDC_STATUS_FORMAT = 9,
  PDC_STATUS_IO = 10,
  PDC_STATUS_PANIC = 11,
} PdcStatus;

/**
 * Opaque continuation state.
 */
typedef struct PdcState PdcState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *pdc_last_error(void);

/**
 * Creates the initial state of demo `name` with its embedded config.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PdcStatus pdc_demo_init(const char *name, struct PdcState **out_state);

/**
 * Loads point file `name` from directory `dir`.
 *
 * # Safety
 * `dir` and `name` must be NUL-terminated strings; `out` must be writable.
 */
enum PdcStatus pdc_load_point(const char *dir, const char *name, struct PdcState **out_state);

/**
 * Independent copy of a state.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum PdcStatus pdc_state_clone(struct PdcState *s, struct PdcState **out_state);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a handle not yet freed.
 */
void pdc_state_free(struct PdcState *s);

/**
 * Directory receiving point and branch files; NULL disables output.
 *
 * # Safety
 * `s` must be a live handle; `dir` NULL or NUL-terminated.
 */
enum PdcStatus pdc_set_output_dir(struct PdcState *s, const char *dir);

/**
 * Sets the continuation step size `ds` for the next run.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_set_ds(struct PdcState *s, double ds);

/**
 * Sets the window `[lammin, lammax]` of the primary parameter.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_set_window(struct PdcState *s, double lammin, double lammax);

/**
 * Toggles bifurcation and fold detection.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_set_checks(struct PdcState *s, bool bifcheck, bool foldcheck);

/**
 * Runs at most `nsteps` continuation steps; the number taken goes to
 * `out_steps` (may be NULL).
 *
 * # Safety
 * `s` must be a live handle; `out_steps` NULL or writable.
 */
enum PdcStatus pdc_cont(struct PdcState *s, size_t nsteps, size_t *out_steps);

/**
 * Continues until `nbif` bifurcation points are found. The located points
 * go to `out_points` (up to `cap` handles, which the caller frees) and their
 * number to `out_found`.
 *
 * # Safety
 * `s` must be a live handle; `out_points` must hold `cap` slots (may be
 * NULL when `cap` is 0); `out_found` writable.
 */
enum PdcStatus pdc_findbif(struct PdcState *s,
                           size_t nbif,
                           size_t nsteps,
                           struct PdcState **out_points,
                           size_t cap,
                           size_t *out_found);

/**
 * Prepares branch switching at a bifurcation point.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_swibra(struct PdcState *s, double ds);

/**
 * Replaces the active parameters (1-based indices, primary first).
 *
 * # Safety
 * `s` must be a live handle; `ilam` must hold `n` entries.
 */
enum PdcStatus pdc_swipar(struct PdcState *s, const size_t *ilam, size_t n);

/**
 * Enters fold or branch-point continuation with `extra` (1-based) free.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_spcontini(struct PdcState *s, size_t extra);

/**
 * Leaves fold or branch-point continuation.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_spcontexit(struct PdcState *s, size_t primary);

/**
 * Time integration; `semilinear` selects the single-factorization scheme.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_time_integrate(struct PdcState *s,
                                  double dt,
                                  size_t nt,
                                  size_t pmod,
                                  bool semilinear);

/**
 * Length of the unknown vector `u` (PDE part followed by parameters).
 *
 * # Safety
 * `s` must be a live handle or NULL (returns 0).
 */
size_t pdc_u_len(const struct PdcState *s);

/**
 * Number of PDE unknowns at the start of `u`.
 *
 * # Safety
 * `s` must be a live handle or NULL (returns 0).
 */
size_t pdc_nu(const struct PdcState *s);

/**
 * Copies `u` into `buf` of length `len`.
 *
 * # Safety
 * `s` must be a live handle; `buf` must hold `len` doubles.
 */
enum PdcStatus pdc_get_u(struct PdcState *s, double *buf, size_t len);

/**
 * Parameter `i` (1-based).
 *
 * # Safety
 * `s` must be a live handle; `out_value` writable.
 */
enum PdcStatus pdc_get_param(struct PdcState *s, size_t i, double *out_value);

/**
 * Sets parameter `i` (1-based); invalidates the tangent.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum PdcStatus pdc_set_param(struct PdcState *s, size_t i, double v);

/**
 * Norm of the full residual at the current point.
 *
 * # Safety
 * `s` must be a live handle; `out_value` writable.
 */
enum PdcStatus pdc_residual_norm(struct PdcState *s, double *out_value);

/**
 * Point type of the current point (see the branch file `ptype` column).
 *
 * # Safety
 * `s` must be a live handle or NULL (returns 0).
 */
int32_t pdc_ptype(const struct PdcState *s);

/**
 * Analytic against finite-difference derivatives; `out_spjac` receives NaN
 * when the model has no second derivative.
 *
 * # Safety
 * `s` must be a live handle; both outputs writable.
 */
enum PdcStatus pdc_check(struct PdcState *s, double *out_jac, double *out_spjac);

/**
 * Writes the current point to `path`.
 *
 * # Safety
 * `s` must be a live handle; `path` NUL-terminated.
 */
enum PdcStatus pdc_save_point(struct PdcState *s, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDECONT_H */
