#ifndef LES3D_H
#define LES3D_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Pair policy selector for [`Les3dParams::pair_mode`].
 */
#define LES3D_PAIRS_AUTO 0

#define LES3D_PAIRS_ALL 1

#define LES3D_PAIRS_SAMPLED 2

typedef enum Les3dStatus {
  LES3D_STATUS_OK = 0,
  LES3D_STATUS_INVALID_INPUT = 2,
  LES3D_STATUS_DEGENERATE = 3,
  LES3D_STATUS_IO = 4,
  LES3D_STATUS_NULL_POINTER = 5,
  LES3D_STATUS_INTERNAL = 6,
} Les3dStatus;

/**
 * Opaque point cloud.
 */
typedef struct Les3dCloud Les3dCloud;

/**
 * Opaque search result.
 */
typedef struct Les3dResult Les3dResult;

typedef struct Les3dParams {
  /**
   * Sweep positions per segment; 0 selects `min(64, n)`.
   */
  uint32_t k;
  uint32_t best_segment_count;
  uint32_t max_order;
  /**
   * 0 ranks segments by minimum score, 1 by maximum.
   */
  int32_t mds_direction;
  /**
   * One of `LES3D_PAIRS_AUTO`, `LES3D_PAIRS_ALL`, `LES3D_PAIRS_SAMPLED`.
   */
  int32_t pair_mode;
  double sample_fraction;
  uint64_t seed;
} Les3dParams;

typedef struct Les3dSphere {
  double center[3];
  double radius;
} Les3dSphere;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next les3d call on the same thread.
 */
const char *les3d_last_error_message(void);

/**
 * Fills `out` with the default search parameters.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `Les3dParams`.
 */
enum Les3dStatus les3d_params_default(struct Les3dParams *out);

/**
 * Builds a cloud from `n_points` packed `x, y, z` triples.
 *
 * # Safety
 * `coords` must point to `3 * n_points` doubles; `out` must be writable.
 */
enum Les3dStatus les3d_cloud_from_xyz(const double *coords,
                                      size_t n_points,
                                      struct Les3dCloud **out);

/**
 * Reads a cloud file. `format` is `"xyz"`, `"csv"` or `"ply-ascii"`, or
 * null to guess from the extension.
 *
 * # Safety
 * `path` and a non-null `format` must be NUL-terminated strings; `out` must
 * be writable.
 */
enum Les3dStatus les3d_cloud_read(const char *path, const char *format, struct Les3dCloud **out);

/**
 * # Safety
 * `cloud` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_cloud_len(const struct Les3dCloud *cloud, size_t *out);

/**
 * # Safety
 * `cloud` must be null or a handle not yet freed.
 */
void les3d_cloud_free(struct Les3dCloud *cloud);

/**
 * Runs the search. `params` may be null for defaults.
 *
 * # Safety
 * `cloud` must be a live handle, `params` null or valid, `out` writable.
 */
enum Les3dStatus les3d_solve(const struct Les3dCloud *cloud,
                             const struct Les3dParams *params,
                             struct Les3dResult **out);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_result_sphere(const struct Les3dResult *result, struct Les3dSphere *out);

/**
 * Iteration order at which the winning sphere was found.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_result_order(const struct Les3dResult *result, uint32_t *out);

/**
 * Copies up to `capacity` contact indices of the winning sphere into
 * `buffer` and stores the total count in `len`. `buffer` may be null when
 * `capacity` is 0.
 *
 * # Safety
 * `buffer` must have room for `capacity` values; `len` must be writable.
 */
enum Les3dStatus les3d_result_contacts(const struct Les3dResult *result,
                                       size_t *buffer,
                                       size_t capacity,
                                       size_t *len);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_result_candidate_count(const struct Les3dResult *result, size_t *out);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_result_candidate(const struct Les3dResult *result,
                                        size_t index,
                                        struct Les3dSphere *out);

/**
 * The result document as a NUL-terminated JSON string, released with
 * [`les3d_string_free`].
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_result_json(const struct Les3dResult *result, char **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void les3d_result_free(struct Les3dResult *result);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void les3d_string_free(char *s);

/**
 * Best in-hull Voronoi vertex sphere.
 *
 * # Safety
 * `cloud` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_exact_les(const struct Les3dCloud *cloud, struct Les3dSphere *out);

/**
 * Best node of a `resolution³` grid over the bounding box.
 *
 * # Safety
 * `cloud` must be a live handle; `out` must be writable.
 */
enum Les3dStatus les3d_grid_les(const struct Les3dCloud *cloud,
                                uint32_t resolution,
                                struct Les3dSphere *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LES3D_H */
