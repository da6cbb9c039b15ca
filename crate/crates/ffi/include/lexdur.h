#ifndef LEXDUR_H
#define LEXDUR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. Zero is success.
 */
typedef enum LexdurStatus {
  LEXDUR_STATUS_OK = 0,
  LEXDUR_STATUS_NULL_POINTER = 1,
  LEXDUR_STATUS_INVALID_UTF8 = 2,
  LEXDUR_STATUS_IO = 3,
  LEXDUR_STATUS_PARSE = 4,
  LEXDUR_STATUS_SCHEMA = 5,
  LEXDUR_STATUS_EMPTY = 6,
  LEXDUR_STATUS_INVALID = 7,
  LEXDUR_STATUS_UNKNOWN_FEATURE = 8,
  LEXDUR_STATUS_FORMULA = 9,
  LEXDUR_STATUS_UNSUPPORTED = 10,
  LEXDUR_STATUS_NUMERICAL = 11,
  LEXDUR_STATUS_CONVERGENCE = 12,
  LEXDUR_STATUS_NOT_COMPARABLE = 13,
  LEXDUR_STATUS_CONFIG = 14,
  LEXDUR_STATUS_UNDEFINED = 15,
  LEXDUR_STATUS_PANIC = 99,
} LexdurStatus;

/**
 * Opaque word-embedding table.
 */
typedef struct LexdurEmbeddings LexdurEmbeddings;

/**
 * Opaque random-forest classifier.
 */
typedef struct LexdurForest LexdurForest;

/**
 * Opaque linear mixed model fit.
 */
typedef struct LexdurLmm LexdurLmm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *lexdur_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lexdur_version(void);

/**
 * Proximity weight of a context pair at distances `d_i` and `d_j` from the target.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum LexdurStatus lexdur_pair_weight(uint32_t d_i, uint32_t d_j, double *out);

/**
 * The same weight as an exact reduced fraction.
 *
 * # Safety
 * `numer` and `denom` must be null or writable.
 */
enum LexdurStatus lexdur_pair_weight_exact(uint32_t d_i,
                                           uint32_t d_j,
                                           uint32_t *numer,
                                           uint32_t *denom);

/**
 * Cosine similarity of two vectors of length `len`.
 *
 * # Safety
 * `u` and `v` must point to `len` doubles; `out` must be writable.
 */
enum LexdurStatus lexdur_cosine(const double *u, const double *v, size_t len, double *out);

/**
 * Pearson correlation. Returns `Undefined` when either input is constant.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `out` must be writable.
 */
enum LexdurStatus lexdur_pearson(const double *x, const double *y, size_t n, double *out);

/**
 * Loads a whitespace-separated embedding file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LexdurStatus lexdur_embeddings_load(const char *path, struct LexdurEmbeddings **out);

/**
 * # Safety
 * `handle` must be null or come from [`lexdur_embeddings_load`] and not be
 * used afterwards.
 */
void lexdur_embeddings_free(struct LexdurEmbeddings *handle);

/**
 * # Safety
 * `handle` must be a live embeddings handle; `out` must be writable.
 */
enum LexdurStatus lexdur_embeddings_dimension(const struct LexdurEmbeddings *handle, size_t *out);

/**
 * Semantic relevance of `target` given its preceding words (nearest last),
 * using at most `window` of them.
 *
 * # Safety
 * `context` must point to `n_context` NUL-terminated strings.
 */
enum LexdurStatus lexdur_semantic_relevance(const struct LexdurEmbeddings *handle,
                                            const char *target,
                                            const char *const *context,
                                            size_t n_context,
                                            size_t window,
                                            double *out);

/**
 * Fits a forest on a row-major `n_rows × n_cols` matrix with labels in
 * `0..n_classes`. `max_depth` 0 means unlimited.
 *
 * # Safety
 * `x` must hold `n_rows * n_cols` doubles, `y` `n_rows` labels; `out` must
 * be writable.
 */
enum LexdurStatus lexdur_forest_fit(const double *x,
                                    size_t n_rows,
                                    size_t n_cols,
                                    const size_t *y,
                                    size_t n_classes,
                                    size_t n_estimators,
                                    size_t max_depth,
                                    uint64_t seed,
                                    struct LexdurForest **out);

/**
 * Predicts a class per row into `out` (`n_rows` entries).
 *
 * # Safety
 * `handle` must be live; `x` must hold `n_rows * n_cols` doubles and `out`
 * room for `n_rows` labels.
 */
enum LexdurStatus lexdur_forest_predict(const struct LexdurForest *handle,
                                        const double *x,
                                        size_t n_rows,
                                        size_t n_cols,
                                        size_t *out);

/**
 * # Safety
 * `handle` must be null or come from [`lexdur_forest_fit`].
 */
void lexdur_forest_free(struct LexdurForest *handle);

/**
 * REML fit of `y ~ 1 + x1 + … + xp + (1|group)` with `x` row-major
 * `n × p` (no intercept column) and integer group codes.
 *
 * # Safety
 * `y` and `group` must hold `n` values, `x` `n * p`; `out` must be writable.
 */
enum LexdurStatus lexdur_lmm_fit(const double *y,
                                 size_t n,
                                 const double *x,
                                 size_t p,
                                 const uint32_t *group,
                                 struct LexdurLmm **out);

/**
 * Residual variance, group variance, AIC and the fixed effects (intercept
 * first, `p + 1` values written to `beta` when it is non-null).
 *
 * # Safety
 * `handle` must be live; non-null outputs must be writable, `beta` for
 * `p + 1` doubles.
 */
enum LexdurStatus lexdur_lmm_summary(const struct LexdurLmm *handle,
                                     double *sigma2_e,
                                     double *sigma2_group,
                                     double *aic,
                                     double *beta);

/**
 * # Safety
 * `handle` must be null or come from [`lexdur_lmm_fit`].
 */
void lexdur_lmm_free(struct LexdurLmm *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXDUR_H */
