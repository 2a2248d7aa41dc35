#ifndef GNFORGE_H
#define GNFORGE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum GnStatus {
  GN_STATUS_OK = 0,
  GN_STATUS_NULL_POINTER = 1,
  GN_STATUS_INVALID_ARGUMENT = 2,
  GN_STATUS_ADMISSIBILITY = 3,
  GN_STATUS_NON_INTEGRABLE = 4,
  GN_STATUS_NUMERIC = 5,
  GN_STATUS_PANIC = 6,
} GnStatus;

/**
 * Opaque function handle.
 */
typedef struct GnFunction GnFunction;

/**
 * Opaque grid handle.
 */
typedef struct GnGrid GnGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last call on this thread if it failed, NULL after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *gn_last_error_message(void);

/**
 * Parses a function descriptor from JSON.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be valid for writes.
 */
enum GnStatus gn_function_from_json(const char *json, struct GnFunction **out_fn);

/**
 * Single Gaussian `amp·exp(−|x − center|²/(4·width))` in `dim` dimensions.
 *
 * # Safety
 * `center` must point to `dim` doubles; `out` must be valid for writes.
 */
enum GnStatus gn_function_gaussian(double amp,
                                   const double *center,
                                   size_t dim,
                                   double width,
                                   struct GnFunction **out_fn);

/**
 * `x ↦ f(λx)` as a new handle.
 *
 * # Safety
 * `f` must be a live handle; `out` must be valid for writes.
 */
enum GnStatus gn_function_dilate(const struct GnFunction *f,
                                 double lambda,
                                 struct GnFunction **out_fn);

/**
 * Spatial dimension of `f`, or 0 for NULL.
 *
 * # Safety
 * `f` must be NULL or a live handle.
 */
size_t gn_function_dim(const struct GnFunction *f);

/**
 * Releases a function handle; NULL is ignored.
 *
 * # Safety
 * `f` must be NULL or a handle not yet freed.
 */
void gn_function_free(struct GnFunction *f);

/**
 * Grid wide enough for `f` with `points` cells per axis.
 *
 * # Safety
 * `f` must be a live handle; `out` must be valid for writes.
 */
enum GnStatus gn_grid_for(const struct GnFunction *f, size_t points, struct GnGrid **out_grid);

/**
 * Cell-centred grid on `[−half_width, half_width]^dim`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GnStatus gn_grid_new(size_t dim, double half_width, size_t points, struct GnGrid **out_grid);

/**
 * Releases a grid handle; NULL is ignored.
 *
 * # Safety
 * `g` must be NULL or a handle not yet freed.
 */
void gn_grid_free(struct GnGrid *g);

/**
 * `‖f‖_{L^{p,q}}` of `f` sampled on `g`.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum GnStatus gn_lorentz_norm(const struct GnFunction *f,
                              const struct GnGrid *g,
                              double p,
                              double q,
                              double *out_value);

/**
 * Thermic Besov quasinorm; a negative `m` selects the default order.
 *
 * # Safety
 * `f` must be live; `out` must be valid for writes.
 */
enum GnStatus gn_besov_norm(const struct GnFunction *f,
                            double s,
                            double p,
                            double q,
                            int32_t m,
                            double *out_value);

/**
 * Triebel-Lizorkin quasinorm with the aggregate measured in `L^{p,r}` of
 * the grid box; a negative `m` selects the default order.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum GnStatus gn_tl_lorentz_norm(const struct GnFunction *f,
                                 const struct GnGrid *g,
                                 double s,
                                 double p,
                                 double q,
                                 double r,
                                 int32_t m,
                                 double *out_value);

/**
 * Evaluates one theorem ratio. `params_json` holds the theorem's index
 * object; the ratio goes to `out_ratio` and, when `out_json` is non-NULL,
 * the full report as a string to be released with [`gn_string_free`].
 *
 * # Safety
 * Strings must be NUL-terminated; handles must be live; `out_ratio` must be
 * valid for writes and `out_json` NULL or valid for writes.
 */
enum GnStatus gn_verify(const char *theorem,
                        const char *params_json,
                        const struct GnFunction *f,
                        const struct GnGrid *g,
                        double *out_ratio,
                        char **out_json);

/**
 * Releases a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string from this library not yet freed.
 */
void gn_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GNFORGE_H */
