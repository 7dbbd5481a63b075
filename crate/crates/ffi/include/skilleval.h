#ifndef SKILLEVAL_H
#define SKILLEVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>

/*
 Result codes. `SK_OK` is zero; everything else is an error.
 */
typedef enum SkStatus {
  SK_OK = 0,
  SK_NULL_POINTER = 1,
  SK_INVALID_ARGUMENT = 2,
  SK_IO = 3,
  SK_CORRUPT_MODEL = 4,
  SK_SHAPE_MISMATCH = 5,
  SK_INDEX_OUT_OF_RANGE = 6,
  SK_BUFFER_TOO_SMALL = 7,
  SK_PANIC = 8,
} SkStatus;

typedef enum SkHeadKind {
  SK_CLASSIFICATION = 0,
  SK_REGRESSION = 1,
} SkHeadKind;

/*
 A trained model with its standardization statistics.
 */
typedef struct SkModel SkModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next call into this library on the same thread.
 */
const char *sk_last_error_message(void);

/*
 Loads a model file written by `skilleval train`.

 # Safety
 `path` must be a nul-terminated string and `out` a writable pointer.
 */
enum SkStatus sk_model_load(const char *path, struct SkModel **out);

/*
 Releases a model; null is ignored.

 # Safety
 `model` must come from [`sk_model_load`] and not be used afterwards.
 */
void sk_model_free(struct SkModel *model);

/*
 # Safety
 `model` must be a live handle and `out` writable.
 */
enum SkStatus sk_model_head_kind(const struct SkModel *model, enum SkHeadKind *out);

/*
 3 for classification, 6 for regression.

 # Safety
 `model` must be a live handle and `out` writable.
 */
enum SkStatus sk_model_n_outputs(const struct SkModel *model, size_t *out);

/*
 Runs a raw (unstandardized) trial through the model and writes the head
 output: class probabilities (N, I, E) or the six OSATS scores.

 # Safety
 `samples` must hold `rows * cols` doubles and `out` at least `out_len`.
 */
enum SkStatus sk_predict(const struct SkModel *model,
                         const double *samples,
                         size_t rows,
                         size_t cols,
                         double *out,
                         size_t out_len);

/*
 Class activation map of output `output_index` (0-based) for a raw trial.
 Writes `rows` raw values to `out_raw` and, when `out_normalized` is not
 null, the min–max normalized map; `z_check` (nullable) receives
 `mean(raw) + bias`, the pre-activation output.

 # Safety
 Buffers must hold at least `out_len` doubles each.
 */
enum SkStatus sk_cam(const struct SkModel *model,
                     const double *samples,
                     size_t rows,
                     size_t cols,
                     size_t output_index,
                     double *out_raw,
                     double *out_normalized,
                     size_t out_len,
                     double *z_check);

/*
 Spearman's ρ with average ranks for ties; 0 when either input is constant.

 # Safety
 `x` and `y` must each hold `n` doubles; `out` must be writable.
 */
enum SkStatus sk_spearman_rho(const double *x, const double *y, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKILLEVAL_H */
