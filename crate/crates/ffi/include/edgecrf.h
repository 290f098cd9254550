#ifndef EDGECRF_H
#define EDGECRF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EdgecrfStatus {
  EDGECRF_STATUS_OK = 0,
  EDGECRF_STATUS_NULL_POINTER = 1,
  EDGECRF_STATUS_INVALID_ARGUMENT = 2,
  EDGECRF_STATUS_IO = 3,
  EDGECRF_STATUS_FORMAT = 4,
  EDGECRF_STATUS_INTERNAL = 5,
} EdgecrfStatus;

/**
 * An energy lattice for direct use of the inference routines.
 */
typedef struct EdgecrfLattice EdgecrfLattice;

/**
 * A trained model loaded from a model file.
 */
typedef struct EdgecrfModel EdgecrfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *edgecrf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *edgecrf_version(void);

/**
 * Load a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EdgecrfStatus edgecrf_model_load(const char *path, struct EdgecrfModel **out);

/**
 * # Safety
 * `model` must come from [`edgecrf_model_load`] and not be used afterwards.
 */
void edgecrf_model_free(struct EdgecrfModel *model);

/**
 * Number of labels; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t edgecrf_model_num_labels(const struct EdgecrfModel *model);

/**
 * Name of label `id`; the string lives as long as the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum EdgecrfStatus edgecrf_model_label_name(const struct EdgecrfModel *model,
                                            size_t id,
                                            const char **out);

/**
 * Viterbi-decode one sentence. `pos` may be null when the model does not
 * use POS features. Writes `n` label ids to `labels_out`.
 *
 * # Safety
 * `tokens` (and `pos` if non-null) must point to `n` NUL-terminated
 * strings; `labels_out` must have room for `n` entries.
 */
enum EdgecrfStatus edgecrf_model_tag(const struct EdgecrfModel *model,
                                     const char *const *tokens,
                                     const char *const *pos,
                                     size_t n,
                                     size_t *labels_out);

/**
 * Zero lattice with `len` positions and `labels` labels.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EdgecrfStatus edgecrf_lattice_new(size_t len, size_t labels, struct EdgecrfLattice **out);

/**
 * # Safety
 * `lat` must come from [`edgecrf_lattice_new`] and not be used afterwards.
 */
void edgecrf_lattice_free(struct EdgecrfLattice *lat);

/**
 * Set the local energy of label `y` at position `i`.
 *
 * # Safety
 * `lat` must be a live handle.
 */
enum EdgecrfStatus edgecrf_lattice_set_local(struct EdgecrfLattice *lat,
                                             size_t i,
                                             size_t y,
                                             double value);

/**
 * Set the transition energy from `prev` at position `i` to `cur` at
 * position `i + 1`.
 *
 * # Safety
 * `lat` must be a live handle.
 */
enum EdgecrfStatus edgecrf_lattice_set_transition(struct EdgecrfLattice *lat,
                                                  size_t i,
                                                  size_t prev,
                                                  size_t cur,
                                                  double value);

/**
 * Set the start energy of label `y`.
 *
 * # Safety
 * `lat` must be a live handle.
 */
enum EdgecrfStatus edgecrf_lattice_set_start(struct EdgecrfLattice *lat, size_t y, double value);

/**
 * Set the end energy of label `y`.
 *
 * # Safety
 * `lat` must be a live handle.
 */
enum EdgecrfStatus edgecrf_lattice_set_end(struct EdgecrfLattice *lat, size_t y, double value);

/**
 * Log partition function.
 *
 * # Safety
 * `lat` must be a live handle and `out` a valid pointer.
 */
enum EdgecrfStatus edgecrf_lattice_log_partition(const struct EdgecrfLattice *lat, double *out);

/**
 * Best path: writes `len` label ids to `labels_out` and its score to
 * `score_out` (which may be null).
 *
 * # Safety
 * `labels_out` must have room for the lattice length.
 */
enum EdgecrfStatus edgecrf_lattice_viterbi(const struct EdgecrfLattice *lat,
                                           size_t *labels_out,
                                           double *score_out);

/**
 * Node marginals, `len x labels` row-major, into `node_out`.
 *
 * # Safety
 * `node_out` must have room for `len * labels` doubles.
 */
enum EdgecrfStatus edgecrf_lattice_marginals(const struct EdgecrfLattice *lat, double *node_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDGECRF_H */
