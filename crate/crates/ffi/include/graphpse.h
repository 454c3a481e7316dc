#ifndef GRAPHPSE_H
#define GRAPHPSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code for every fallible FFI call.
 */
typedef enum GpseStatus {
  GpseStatus_Ok = 0,
  GpseStatus_NullPointer = 1,
  GpseStatus_InvalidArgument = 2,
  GpseStatus_InvalidGraph = 3,
  GpseStatus_ComputeError = 4,
} GpseStatus;

/**
 * Target-battery mode selector for [`gpse_encode`].
 */
typedef enum GpseTargetMode {
  GpseTargetMode_Plain = 0,
  GpseTargetMode_Structuralized = 1,
} GpseTargetMode;

/**
 * Feature-structuralization mode selector for [`gpse_structuralize`].
 */
typedef enum GpseTransformMode {
  GpseTransformMode_Categorical = 0,
  GpseTransformMode_Edge = 1,
  GpseTransformMode_Continuous = 2,
  GpseTransformMode_Auto = 3,
} GpseTransformMode;

/**
 * Opaque graph handle.
 */
typedef struct GpseGraph GpseGraph;

/**
 * Opaque handle over per-node encoding targets.
 */
typedef struct GpseTargets GpseTargets;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or NULL.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *gpse_last_error(void);

/**
 * Parse one JSONL graph record. On success writes a new handle to `out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GpseStatus gpse_graph_from_json(const char *json, struct GpseGraph **out);

/**
 * Serialize a graph back to a JSONL record. Free with `gpse_string_free`.
 *
 * # Safety
 * `graph` must be a live handle from this library.
 */
char *gpse_graph_to_json(const struct GpseGraph *graph);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be a live handle or NULL.
 */
uintptr_t gpse_graph_num_nodes(const struct GpseGraph *graph);

/**
 * Number of undirected edges, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be a live handle or NULL.
 */
uintptr_t gpse_graph_num_edges(const struct GpseGraph *graph);

/**
 * Check structural invariants; `Ok` when the graph is valid.
 *
 * # Safety
 * `graph` must be a live handle.
 */
enum GpseStatus gpse_graph_validate(const struct GpseGraph *graph);

/**
 * Apply feature-structuralization, writing a new graph handle to `out`.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum GpseStatus gpse_structuralize(const struct GpseGraph *graph,
                                   enum GpseTransformMode mode,
                                   struct GpseGraph **out);

/**
 * Compute the P/SE target battery for a graph with default settings.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum GpseStatus gpse_encode(const struct GpseGraph *graph,
                            enum GpseTargetMode mode,
                            struct GpseTargets **out);

/**
 * Number of target rows (original nodes), or 0 for a null handle.
 *
 * # Safety
 * `targets` must be a live handle or NULL.
 */
uintptr_t gpse_targets_num_rows(const struct GpseTargets *targets);

/**
 * Width of each target row, or 0 for a null handle.
 *
 * # Safety
 * `targets` must be a live handle or NULL.
 */
uintptr_t gpse_targets_width(const struct GpseTargets *targets);

/**
 * Copy row `row` into `buf`, which must hold at least `len` doubles and
 * `len` must equal the row width.
 *
 * # Safety
 * `targets` must be a live handle and `buf` writable for `len` doubles.
 */
enum GpseStatus gpse_targets_row(const struct GpseTargets *targets,
                                 uintptr_t row,
                                 double *buf,
                                 uintptr_t len);

/**
 * Release a graph handle. NULL is a no-op.
 *
 * # Safety
 * `graph` must come from this library and not be freed twice.
 */
void gpse_graph_free(struct GpseGraph *graph);

/**
 * Release a targets handle. NULL is a no-op.
 *
 * # Safety
 * `targets` must come from this library and not be freed twice.
 */
void gpse_targets_free(struct GpseTargets *targets);

/**
 * Release a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void gpse_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHPSE_H */
