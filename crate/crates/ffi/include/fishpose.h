#ifndef FISHPOSE_H
#define FISHPOSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FpStatus {
  FP_STATUS_OK = 0,
  FP_STATUS_INVALID_INPUT = 1,
  FP_STATUS_OUT_OF_FOV = 2,
  FP_STATUS_BEHIND_PLANE = 3,
  FP_STATUS_NOT_VISIBLE = 4,
  FP_STATUS_FORMAT = 5,
  FP_STATUS_CONFIG = 6,
  FP_STATUS_IO = 7,
  FP_STATUS_IMAGE = 8,
  FP_STATUS_NULL_POINTER = 9,
  FP_STATUS_PANIC = 10,
} FpStatus;

/**
 * Opaque sampling grid.
 */
typedef struct FpGrid FpGrid;

/**
 * Opaque fisheye intrinsics.
 */
typedef struct FpIntrinsics FpIntrinsics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in bytes
 * excluding the terminator; `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t fp_last_error_message(char *buf, size_t len);

/**
 * Creates equidistant fisheye intrinsics. `fov_max` is the full field of
 * view in radians.
 *
 * # Safety
 * `out_handle` must be a valid pointer.
 */
enum FpStatus fp_intrinsics_new(double f,
                                double cx,
                                double cy,
                                uint32_t width,
                                uint32_t height,
                                double fov_max,
                                struct FpIntrinsics **out_handle);

/**
 * Loads intrinsics from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_handle` a valid pointer.
 */
enum FpStatus fp_intrinsics_load(const char *path, struct FpIntrinsics **out_handle);

/**
 * # Safety
 * `k` must be null or a handle from `fp_intrinsics_new`/`fp_intrinsics_load`
 * that has not been freed.
 */
void fp_intrinsics_free(struct FpIntrinsics *k);

/**
 * Projects a camera-frame ray (need not be unit) to a fisheye pixel.
 *
 * # Safety
 * `ray` must point to 3 doubles; `u`, `v` must be valid.
 */
enum FpStatus fp_ray_to_pixel(const struct FpIntrinsics *k,
                              const double *ray,
                              double *u,
                              double *v);

/**
 * Unit ray for a fisheye pixel, written to `ray[0..3]`.
 *
 * # Safety
 * `ray` must be valid for 3 doubles.
 */
enum FpStatus fp_pixel_to_ray(const struct FpIntrinsics *k, double u, double v, double *ray);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FpStatus fp_pixel_to_spherical(const struct FpIntrinsics *k,
                                    double u,
                                    double v,
                                    double *theta,
                                    double *phi);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FpStatus fp_spherical_to_pixel(const struct FpIntrinsics *k,
                                    double theta,
                                    double phi,
                                    double *u,
                                    double *v);

/**
 * Gnomonic projection of `(theta, phi)` about the tangent point `(theta0, phi0)`.
 *
 * # Safety
 * `x`, `y` must be valid.
 */
enum FpStatus fp_gnomonic_forward(double theta,
                                  double phi,
                                  double theta0,
                                  double phi0,
                                  double *x,
                                  double *y);

/**
 * # Safety
 * `theta`, `phi` must be valid.
 */
enum FpStatus fp_gnomonic_inverse(double x,
                                  double y,
                                  double theta0,
                                  double phi0,
                                  double *theta,
                                  double *phi);

/**
 * Writes `R_adj` for the tangent point, row-major, to `rows[0..9]`.
 *
 * # Safety
 * `rows` must be valid for 9 doubles.
 */
enum FpStatus fp_rotation_adjust(double theta0, double phi0, double *rows);

/**
 * Apparent orientation `R_adj · R` for global orientation `q` at translation `t`.
 *
 * # Safety
 * `q` and `q_out` must be valid for 4 doubles, `t` for 3.
 */
enum FpStatus fp_apparent_orientation(const double *q, const double *t, double *q_out);

/**
 * Global orientation from apparent orientation `q_p` at translation `t`.
 *
 * # Safety
 * `q_p` and `q_out` must be valid for 4 doubles, `t` for 3.
 */
enum FpStatus fp_recover_global_orientation(const double *q_p, const double *t, double *q_out);

/**
 * Builds the grid of a `width`×`height` virtual perspective view with focal
 * length `f_p` centered on `(theta0, phi0)`.
 *
 * # Safety
 * `k` must be a live handle and `out_handle` valid.
 */
enum FpStatus fp_grid_build_perspective(const struct FpIntrinsics *k,
                                        double theta0,
                                        double phi0,
                                        uint32_t width,
                                        uint32_t height,
                                        double f_p,
                                        size_t workers,
                                        struct FpGrid **out_handle);

/**
 * Builds the feature-map grid for the ROI `x, y, w, h` at `stride`.
 * `f_equiv` may be null.
 *
 * # Safety
 * `k` must be a live handle and `out_handle` valid.
 */
enum FpStatus fp_grid_build_roi(const struct FpIntrinsics *k,
                                double x,
                                double y,
                                double w,
                                double h,
                                uint32_t stride,
                                size_t workers,
                                struct FpGrid **out_handle,
                                double *f_equiv);

/**
 * # Safety
 * `grid` must be a live handle; `path` NUL terminated.
 */
enum FpStatus fp_grid_save(const struct FpGrid *grid, const char *path);

/**
 * # Safety
 * `path` NUL terminated; `out_handle` valid.
 */
enum FpStatus fp_grid_load(const char *path, struct FpGrid **out_handle);

/**
 * # Safety
 * `grid` must be a live handle; `width`, `height` valid.
 */
enum FpStatus fp_grid_dims(const struct FpGrid *grid, uint32_t *width, uint32_t *height);

/**
 * # Safety
 * `grid` must be null or a live handle.
 */
void fp_grid_free(struct FpGrid *grid);

/**
 * Bilinear remap of an interleaved 8-bit image through `grid`. `dst` must
 * hold `grid width × grid height × channels` bytes; invalid samples get `fill`.
 *
 * # Safety
 * `src` must be valid for `src_width × src_height × channels` bytes and
 * `dst` for `dst_len` bytes.
 */
enum FpStatus fp_remap_u8(const struct FpGrid *grid,
                          const uint8_t *src,
                          uint32_t src_width,
                          uint32_t src_height,
                          uint32_t channels,
                          uint8_t fill,
                          size_t workers,
                          uint8_t *dst,
                          size_t dst_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FISHPOSE_H */
