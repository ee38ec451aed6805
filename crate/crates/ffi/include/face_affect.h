#ifndef FACE_AFFECT_H
#define FACE_AFFECT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FaStatus {
  FA_STATUS_OK = 0,
  FA_STATUS_NULL_POINTER = 1,
  FA_STATUS_INVALID_ARGUMENT = 2,
  FA_STATUS_CONFIG = 3,
  FA_STATUS_IO = 4,
  FA_STATUS_DATA = 5,
  FA_STATUS_INSUFFICIENT_DATA = 6,
  FA_STATUS_MEDIA = 7,
  FA_STATUS_PANIC = 8,
} FaStatus;

// Emotion classifier handle.
typedef struct FaClassifier FaClassifier;

// Face detector handle.
typedef struct FaDetector FaDetector;

typedef struct FaFace {
  uint32_t x;
  uint32_t y;
  uint32_t w;
  uint32_t h;
  double confidence;
  // left eye, right eye, nose, mouth left, mouth right as (x, y) pairs
  float landmarks[10];
} FaFace;

typedef struct FaTTest {
  double t;
  double df;
  double p;
} FaTTest;

typedef struct FaAnova {
  double f;
  double df_between;
  double df_within;
  double p;
  double eta_squared;
} FaAnova;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *fa_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *fa_version(void);

// Loads the bundled detector, verifying model hashes. `min_face_px` below
// 12 is rejected.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum FaStatus fa_detector_new(uint32_t min_face_px, struct FaDetector **out);

// # Safety
// `det` must be null or a handle from [`fa_detector_new`] not yet freed.
void fa_detector_free(struct FaDetector *det);

// Detects faces in a packed RGB image, best first. Up to `capacity` faces
// are written to `faces`; `count` receives the total found, which may
// exceed `capacity`.
//
// # Safety
// `rgb` must hold `stride * (height - 1) + 3 * width` readable bytes,
// `faces` room for `capacity` entries, and `count` one `size_t`.
enum FaStatus fa_detect(const struct FaDetector *det,
                        const uint8_t *rgb,
                        uint32_t width,
                        uint32_t height,
                        size_t stride,
                        struct FaFace *faces,
                        size_t capacity,
                        size_t *count);

// Loads the bundled emotion classifier, verifying its hash.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum FaStatus fa_classifier_new(struct FaClassifier **out);

// # Safety
// `c` must be null or a handle from [`fa_classifier_new`] not yet freed.
void fa_classifier_free(struct FaClassifier *c);

// Crops and aligns `face` from the image and writes seven emotion
// probabilities (angry, disgust, fear, happy, sad, surprise, neutral) to
// `scores`.
//
// # Safety
// Image buffer as for [`fa_detect`]; `face` must point to one face and
// `scores` to room for seven doubles.
enum FaStatus fa_classify_face(const struct FaClassifier *c,
                               const uint8_t *rgb,
                               uint32_t width,
                               uint32_t height,
                               size_t stride,
                               const struct FaFace *face,
                               double *scores);

// Two-sample t-test, two-sided. `welch` selects unequal variances;
// otherwise the pooled-variance test is used.
//
// # Safety
// `a` and `b` must hold `na` and `nb` doubles; `out` one [`FaTTest`].
enum FaStatus fa_t_test(const double *a,
                        size_t na,
                        const double *b,
                        size_t nb,
                        bool welch,
                        struct FaTTest *out);

// One-way ANOVA over `k` groups stored back to back in `values`, with
// `sizes[i]` observations in group `i`.
//
// # Safety
// `sizes` must hold `k` entries and `values` their sum; `out` one [`FaAnova`].
enum FaStatus fa_anova(const double *values, const size_t *sizes, size_t k, struct FaAnova *out);

// Full statistical report for a per-video summary CSV, as JSON. Free the
// result with [`fa_string_free`].
//
// # Safety
// `path` must be a NUL-terminated string and `out_json` writable.
enum FaStatus fa_analyze_summary_csv(const char *path, bool welch, char **out_json);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void fa_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACE_AFFECT_H */
