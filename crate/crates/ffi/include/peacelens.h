#ifndef PEACELENS_H
#define PEACELENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Number of values in one embedding.
#define PEACELENS_EMBEDDING_DIM 1536

// Number of emotion categories in a profile.
#define PEACELENS_EMOTION_CATEGORIES 28

// Number of peace dimensions.
#define PEACELENS_DIMENSIONS 5

// Result code of every fallible call.
typedef enum PeacelensStatus {
  PEACELENS_STATUS_OK = 0,
  PEACELENS_STATUS_NULL_ARGUMENT = 1,
  PEACELENS_STATUS_INVALID_ARGUMENT = 2,
  PEACELENS_STATUS_IO = 3,
  PEACELENS_STATUS_CORRUPT_CHECKPOINT = 4,
  PEACELENS_STATUS_SHAPE_MISMATCH = 5,
  // A model reply could not be turned into five scores.
  PEACELENS_STATUS_PARSE_FAILED = 6,
  // The quantity is mathematically undefined, e.g. r of a constant series.
  PEACELENS_STATUS_UNDEFINED = 7,
  PEACELENS_STATUS_PANIC = 8,
} PeacelensStatus;

// Opaque trained classifier.
typedef struct PeacelensModel PeacelensModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next library call on the same thread.
const char *peacelens_last_error(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void peacelens_string_free(char *s);

// Load a checkpoint file.
//
// # Safety
// `path` must be a NUL-terminated string, `out` a valid pointer.
enum PeacelensStatus peacelens_model_load(const char *path, struct PeacelensModel **out);

// Free a model. NULL is ignored.
//
// # Safety
// `model` must come from [`peacelens_model_load`] and not have been freed.
void peacelens_model_free(struct PeacelensModel *model);

// Number of input values the model expects.
//
// # Safety
// `model` must be a live model handle or NULL.
size_t peacelens_model_input_len(const struct PeacelensModel *model);

// Architecture name (`feed_forward`, `cnn`, `revised_cnn` or `custom`).
// Free the result with [`peacelens_string_free`].
//
// # Safety
// `model` must be a live model handle, `out` a valid pointer.
enum PeacelensStatus peacelens_model_architecture(const struct PeacelensModel *model, char **out);

// High-peace probability of one input vector.
//
// # Safety
// `input` must point to `len` doubles; `out_probability` must be valid.
enum PeacelensStatus peacelens_model_predict(const struct PeacelensModel *model,
                                             const double *input,
                                             size_t len,
                                             double *out_probability);

// Deterministic offline embedding of `text`: unit norm, seeded by its
// SHA-256. `out_len` must equal [`PEACELENS_EMBEDDING_DIM`].
//
// # Safety
// `text` must be NUL-terminated; `out` must hold `out_len` doubles.
enum PeacelensStatus peacelens_stub_embed(const char *text, double *out, size_t out_len);

// Sample Pearson correlation. Returns `Undefined` (and leaves `out_r`
// untouched) when either series is constant.
//
// # Safety
// `x` and `y` must each point to `n` doubles; `out_r` must be valid.
enum PeacelensStatus peacelens_pearson_r(const double *x, const double *y, size_t n, double *out_r);

// Valence in [-1, 1] of a 28-category emotion profile under the built-in
// weight table. Categories are in the order of the emotion taxonomy,
// `neutral` last.
//
// # Safety
// `scores` must point to 28 doubles; `out_valence` must be valid.
enum PeacelensStatus peacelens_map_valence(const double *scores, double *out_valence);

// Parse a model reply into five scores ordered compassion_contempt,
// news_opinion, prevention_promotion, order_creativity, nuance_simplistic.
// On `ParseFailed` the last error starts with the error kind, e.g.
// `out_of_range: ...`.
//
// # Safety
// `response` must be NUL-terminated; `out_scores` must hold 5 bytes.
enum PeacelensStatus peacelens_parse_scores(const char *response, uint8_t *out_scores);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PEACELENS_H */
