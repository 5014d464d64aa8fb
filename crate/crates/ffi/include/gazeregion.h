#ifndef GAZEREGION_H
#define GAZEREGION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values per frame in landmark buffers.
 */
#define GZ_FRAME_VALUES 112

/**
 * Largest class count of any scheme.
 */
#define GZ_MAX_CLASSES 6

typedef enum GzStatus {
  GZ_STATUS_OK = 0,
  GZ_STATUS_NULL_POINTER = 1,
  GZ_STATUS_INVALID_ARGUMENT = 2,
  GZ_STATUS_IO = 3,
  GZ_STATUS_BAD_MODEL = 4,
  GZ_STATUS_NORMALIZE = 5,
  GZ_STATUS_PANIC = 6,
} GzStatus;

/**
 * Per-subject normalization handle.
 */
typedef struct GzContext GzContext;

/**
 * Trained model handle.
 */
typedef struct GzModel GzModel;

typedef struct GzDecision {
  uint32_t predicted;
  uint32_t n_classes;
  /**
   * Ratio of the top two probabilities; `+inf` when only one is nonzero.
   */
  double confidence;
  /**
   * 1 when the confidence reached the threshold, else 0.
   */
  uint8_t decided;
  /**
   * First `n_classes` entries are valid.
   */
  double probs[GZ_MAX_CLASSES];
} GzDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last error on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *gz_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gz_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GzStatus gz_model_load(const char *path, struct GzModel **out);

/**
 * # Safety
 * `model` must come from [`gz_model_load`] and not be freed twice.
 */
void gz_model_free(struct GzModel *model);

/**
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum GzStatus gz_model_n_classes(const struct GzModel *model, uint32_t *out);

/**
 * Context stored in the model for a training subject.
 *
 * # Safety
 * `model`, `subject` and `out` must be valid; `subject` NUL-terminated.
 */
enum GzStatus gz_context_from_model(const struct GzModel *model,
                                    const char *subject,
                                    struct GzContext **out);

/**
 * Calibrate a context from `n_frames` consecutive frames of one subject
 * (`n_frames * GZ_FRAME_VALUES` doubles). The model's calibration window
 * caps how many are used.
 *
 * # Safety
 * `landmarks` must point to `n_frames * GZ_FRAME_VALUES` doubles.
 */
enum GzStatus gz_context_from_frames(const struct GzModel *model,
                                     const double *landmarks,
                                     uintptr_t n_frames,
                                     struct GzContext **out);

/**
 * # Safety
 * `ctx` must come from a `gz_context_*` constructor and not be freed twice.
 */
void gz_context_free(struct GzContext *ctx);

/**
 * Classify one frame of `GZ_FRAME_VALUES` raw landmark coordinates.
 * `threshold` must be at least 1.
 *
 * # Safety
 * All pointers must be valid; `landmarks` must hold `GZ_FRAME_VALUES` doubles.
 */
enum GzStatus gz_classify(const struct GzModel *model,
                          const struct GzContext *ctx,
                          const double *landmarks,
                          double threshold,
                          struct GzDecision *out);

/**
 * Confidence of an arbitrary probability vector of length `n` (>= 2).
 *
 * # Safety
 * `probs` must point to `n` doubles and `out` must be valid.
 */
enum GzStatus gz_confidence(const double *probs, uintptr_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEREGION_H */
