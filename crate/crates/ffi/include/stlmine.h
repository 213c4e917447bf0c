#ifndef STLMINE_H
#define STLMINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StlmineStatus {
  STLMINE_STATUS_OK = 0,
  STLMINE_STATUS_NULL_POINTER = 1,
  STLMINE_STATUS_INVALID_UTF8 = 2,
  STLMINE_STATUS_PARSE = 3,
  STLMINE_STATUS_INVALID_ARGUMENT = 4,
  STLMINE_STATUS_EVALUATION = 5,
  STLMINE_STATUS_IO = 6,
  STLMINE_STATUS_CORRUPT = 7,
  STLMINE_STATUS_NO_CANDIDATES = 8,
  STLMINE_STATUS_BUFFER_TOO_SMALL = 9,
  STLMINE_STATUS_PANIC = 10,
} StlmineStatus;

/**
 * Formula database.
 */
typedef struct StlmineDb StlmineDb;

/**
 * Result list of a database query.
 */
typedef struct StlmineHits StlmineHits;

/**
 * Stored reference set: anchor formulae and base-measure trajectories.
 */
typedef struct StlmineReference StlmineReference;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *stlmine_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *stlmine_version(void);

/**
 * Rewrites `formula` in canonical text form.
 *
 * # Safety
 * `formula` must be a nul-terminated string; `buf` must hold `len` bytes.
 */
int32_t stlmine_formula_canonical(const char *formula, char *buf, size_t len, size_t *needed);

/**
 * Robustness at sample `t` of a trajectory stored channel-major:
 * `values[d * n_points + k]` is variable `d` at sample `k`.
 *
 * # Safety
 * `values` must point to `dim * n_points` doubles.
 */
int32_t stlmine_robustness(const char *formula,
                           const double *values,
                           size_t dim,
                           size_t n_points,
                           double dt,
                           size_t t,
                           double *out);

/**
 * Builds a reference set with default sampler parameters.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free
 * with [`stlmine_reference_free`].
 */
int32_t stlmine_reference_build(size_t n_train,
                                size_t n_mc,
                                uint64_t seed,
                                struct StlmineReference **out);

/**
 * # Safety
 * `path` must be nul-terminated and `out` valid.
 */
int32_t stlmine_reference_load(const char *path, struct StlmineReference **out);

/**
 * # Safety
 * `r` must come from this library; `path` must be nul-terminated.
 */
int32_t stlmine_reference_save(const struct StlmineReference *r, const char *path);

/**
 * Embedding length, the number of anchor formulae; 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or come from this library.
 */
size_t stlmine_reference_embedding_len(const struct StlmineReference *r);

/**
 * Writes the embedding of `formula` into `out`, which holds `len` doubles.
 *
 * # Safety
 * `r` must come from this library, `formula` be nul-terminated and `out`
 * point to `len` doubles.
 */
int32_t stlmine_embed(const struct StlmineReference *r,
                      const char *formula,
                      double *out,
                      size_t len);

/**
 * Normalized kernel between two formulae.
 *
 * # Safety
 * `r` must come from this library; the strings must be nul-terminated.
 */
int32_t stlmine_kernel(const struct StlmineReference *r, const char *a, const char *b, double *out);

/**
 * Frees a reference set.
 *
 * # Safety
 * `r` must be NULL or a handle not yet freed.
 */
void stlmine_reference_free(struct StlmineReference *r);

/**
 * # Safety
 * `path` must be nul-terminated and `out` valid.
 */
int32_t stlmine_db_load(const char *path, struct StlmineDb **out);

/**
 * Number of stored rows over all shards; 0 for NULL.
 *
 * # Safety
 * `db` must be NULL or come from this library.
 */
size_t stlmine_db_len(const struct StlmineDb *db);

/**
 * Exact nearest-neighbour search. `max_nodes` selects the shard budget;
 * 0 searches the largest budget present.
 *
 * # Safety
 * `db` must come from this library, `embedding` point to `len` doubles
 * and `out` be valid.
 */
int32_t stlmine_db_query(const struct StlmineDb *db,
                         const double *embedding,
                         size_t len,
                         size_t k,
                         size_t max_nodes,
                         struct StlmineHits **out);

/**
 * # Safety
 * `db` must be NULL or a handle not yet freed.
 */
void stlmine_db_free(struct StlmineDb *db);

/**
 * # Safety
 * `h` must be NULL or come from this library.
 */
size_t stlmine_hits_len(const struct StlmineHits *h);

/**
 * Formula text of hit `i`, owned by the hit list; NULL when out of range.
 *
 * # Safety
 * `h` must be NULL or come from this library.
 */
const char *stlmine_hits_text(const struct StlmineHits *h, size_t i);

/**
 * L2 distance of hit `i`; NaN when out of range.
 *
 * # Safety
 * `h` must be NULL or come from this library.
 */
double stlmine_hits_distance(const struct StlmineHits *h, size_t i);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void stlmine_hits_free(struct StlmineHits *h);

/**
 * Mines a formula from a dataset CSV with default settings and writes it
 * into `buf`, denormalized and on the data's time scale.
 *
 * # Safety
 * `db` must come from this library, `csv_path` be nul-terminated, `buf`
 * hold `len` bytes; `best_g` and `needed` may be NULL.
 */
int32_t stlmine_mine_csv(const struct StlmineDb *db,
                         const char *csv_path,
                         uint64_t seed,
                         char *buf,
                         size_t len,
                         size_t *needed,
                         double *best_g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STLMINE_H */
