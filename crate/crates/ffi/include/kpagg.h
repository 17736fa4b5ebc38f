#ifndef KPAGG_H
#define KPAGG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Instance family selector for [`kpagg_dataset_generate`].
 */
typedef enum KpaggFamily {
  KPAGG_FAMILY_RANDOM = 0,
  KPAGG_FAMILY_FIXED_CAPACITY = 1,
  KPAGG_FAMILY_HARD = 2,
} KpaggFamily;

/**
 * Result code of every fallible call.
 */
typedef enum KpaggStatus {
  KPAGG_STATUS_OK = 0,
  KPAGG_STATUS_NULL_POINTER = 1,
  KPAGG_STATUS_INVALID_UTF8 = 2,
  KPAGG_STATUS_PARAMETER = 3,
  KPAGG_STATUS_DOMAIN = 4,
  KPAGG_STATUS_PARSE = 5,
  KPAGG_STATUS_DIMENSION = 6,
  KPAGG_STATUS_RESOURCE = 7,
  KPAGG_STATUS_NUMERIC = 8,
  KPAGG_STATUS_USAGE = 9,
  KPAGG_STATUS_INTEGRITY = 10,
  KPAGG_STATUS_IO = 11,
  KPAGG_STATUS_CONFIG = 12,
  KPAGG_STATUS_PANIC = 13,
} KpaggStatus;

/**
 * A learned aggregation policy.
 */
typedef struct KpaggAggregation KpaggAggregation;

/**
 * A set of knapsack instances.
 */
typedef struct KpaggDataset KpaggDataset;

/**
 * A trained actor-critic model.
 */
typedef struct KpaggModel KpaggModel;

/**
 * Value and weight of one solution, in the instance's scaled units.
 */
typedef struct KpaggSolution {
  uint64_t value;
  uint64_t weight;
  size_t item_count;
} KpaggSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len - 1` bytes) and returns the full message
 * length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t kpagg_last_error_message(char *buf, size_t len);

/**
 * Generates `m` instances of up to `n` items. `capacity` overrides the fixed
 * capacity of the fixed-capacity family when non-zero.
 *
 * # Safety
 * `out` must point to writable storage for one handle.
 */
enum KpaggStatus kpagg_dataset_generate(enum KpaggFamily family,
                                        size_t m,
                                        size_t n,
                                        uint64_t r,
                                        uint64_t seed,
                                        uint64_t capacity,
                                        struct KpaggDataset **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must point to writable
 * storage for one handle.
 */
enum KpaggStatus kpagg_dataset_read(const char *path, struct KpaggDataset **out);

/**
 * # Safety
 * `ds` must be a live dataset handle and `path` a NUL-terminated string.
 */
enum KpaggStatus kpagg_dataset_write(const struct KpaggDataset *ds, const char *path);

/**
 * Number of instances, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t kpagg_dataset_len(const struct KpaggDataset *ds);

/**
 * Largest instance size `N` the dataset admits, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t kpagg_dataset_n_max(const struct KpaggDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void kpagg_dataset_free(struct KpaggDataset *ds);

/**
 * Greedy value-to-weight solution of instance `index` (0-based).
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum KpaggStatus kpagg_solve_greedy(const struct KpaggDataset *ds,
                                    size_t index,
                                    struct KpaggSolution *out);

/**
 * Exact dynamic-programming solution of instance `index` (0-based).
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum KpaggStatus kpagg_solve_dp(const struct KpaggDataset *ds,
                                size_t index,
                                struct KpaggSolution *out);

/**
 * Learns an aggregation policy from `ds` with default Q-learning settings.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum KpaggStatus kpagg_aggregation_learn(const struct KpaggDataset *ds,
                                         uint64_t seed,
                                         struct KpaggAggregation **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KpaggStatus kpagg_aggregation_read(const char *path, struct KpaggAggregation **out);

/**
 * # Safety
 * `agg` must be a live handle and `path` a NUL-terminated string.
 */
enum KpaggStatus kpagg_aggregation_write(const struct KpaggAggregation *agg, const char *path);

/**
 * # Safety
 * `agg` must be null or a handle not yet freed.
 */
void kpagg_aggregation_free(struct KpaggAggregation *agg);

/**
 * Trains a model on `ds` for `t_max` steps with default settings. `agg` may
 * be null to train on the raw feature vector. When `best` is non-null it
 * receives the best value found per instance (`kpagg_dataset_len` entries).
 *
 * # Safety
 * `ds` must be a live dataset handle, `agg` null or a live handle, `best`
 * null or writable for `kpagg_dataset_len(ds)` values, `out` writable.
 */
enum KpaggStatus kpagg_train(const struct KpaggDataset *ds,
                             const struct KpaggAggregation *agg,
                             uint64_t t_max,
                             uint64_t seed,
                             uint64_t *best,
                             struct KpaggModel **out);

/**
 * Loads a checkpoint written by `kpagg train` or [`kpagg_model_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KpaggStatus kpagg_model_load(const char *path, struct KpaggModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum KpaggStatus kpagg_model_save(const struct KpaggModel *model, const char *path);

/**
 * Item count `N` the model was trained for, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t kpagg_model_n_max(const struct KpaggModel *model);

/**
 * Solves instance `index` of `ds` with the model. `episodes == 0` runs one
 * greedy rollout; otherwise the best of the greedy rollout and `episodes`
 * sampled ones is returned. `agg` may be null for a model trained without
 * aggregation.
 *
 * # Safety
 * `model` and `ds` must be live handles, `agg` null or live, `out` writable.
 */
enum KpaggStatus kpagg_model_solve(const struct KpaggModel *model,
                                   const struct KpaggAggregation *agg,
                                   const struct KpaggDataset *ds,
                                   size_t index,
                                   size_t episodes,
                                   uint64_t seed,
                                   struct KpaggSolution *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void kpagg_model_free(struct KpaggModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KPAGG_H */
