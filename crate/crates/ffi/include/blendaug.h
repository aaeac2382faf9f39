/* C interface to the blendaug phoneme blending library. */

#ifndef BLENDAUG_H
#define BLENDAUG_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Length of a GOP vector.
 */
#define BA_GOP_DIM 84

typedef enum BaStatus {
  BA_STATUS_OK = 0,
  BA_STATUS_NULL_POINTER = 1,
  BA_STATUS_INVALID_ARGUMENT = 2,
  BA_STATUS_INVALID_UTF8 = 3,
  BA_STATUS_IO = 4,
  BA_STATUS_INVALID_DATA = 5,
  BA_STATUS_SILENT_DONOR = 6,
  BA_STATUS_SEGMENT_TOO_SHORT = 7,
  BA_STATUS_NOT_FOUND = 8,
  BA_STATUS_BUFFER_TOO_SMALL = 9,
  BA_STATUS_PANIC = 10,
} BaStatus;

typedef enum BaDonorWeighting {
  BA_DONOR_WEIGHTING_CONFUSION_WEIGHTED = 0,
  BA_DONOR_WEIGHTING_UNIFORM = 1,
} BaDonorWeighting;

typedef enum BaTemplate {
  BA_TEMPLATE_SMOOTH_OVERLAY = 0,
  BA_TEMPLATE_CUT_MIX = 1,
  BA_TEMPLATE_SMOOTH_CONCATENATION = 2,
  BA_TEMPLATE_SMOOTH_GAUSSIAN_OVERLAY = 3,
  BA_TEMPLATE_CUT_PASTE = 4,
} BaTemplate;

typedef enum BaLabelMode {
  BA_LABEL_MODE_FRAME_WEIGHTED = 0,
  BA_LABEL_MODE_PAPER_FLOOR = 1,
} BaLabelMode;

/**
 * Output of [`ba_speech_blend`].
 */
typedef struct BaBlendResult BaBlendResult;

/**
 * Close phoneme pair dictionary.
 */
typedef struct BaCloseDict BaCloseDict;

/**
 * Frame-level phone posteriors over the 42-phone inventory.
 */
typedef struct BaPosteriors BaPosteriors;

/**
 * Seeded random source for donor draws.
 */
typedef struct BaRng BaRng;

typedef struct BaMaskParams {
  double overlay_lambda;
  double gaussian_depth;
  double gaussian_sigma_frac;
  double crossfade_frac;
} BaMaskParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *ba_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ba_version(void);

struct BaMaskParams ba_mask_params_default(void);

struct BaRng *ba_rng_new(uint64_t seed);

/**
 * # Safety
 * `rng` must come from [`ba_rng_new`] and not be used afterwards.
 */
void ba_rng_free(struct BaRng *rng);

/**
 * The bundled starter dictionary.
 */
struct BaCloseDict *ba_close_dict_starter(void);

/**
 * Loads a tab-separated `candidate donor weight` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BaStatus ba_close_dict_load(const char *path, struct BaCloseDict **out);

/**
 * # Safety
 * `dict` must come from this library and not be used afterwards.
 */
void ba_close_dict_free(struct BaCloseDict *dict);

/**
 * Draws a close donor for `candidate` into `buf`. Returns
 * `BA_STATUS_NOT_FOUND` when the candidate has no entries.
 *
 * # Safety
 * Handles must be live, `candidate` NUL-terminated and `buf` writable for
 * `buf_len` bytes.
 */
enum BaStatus ba_close_dict_pick_donor(const struct BaCloseDict *dict,
                                       const char *candidate,
                                       struct BaRng *rng,
                                       enum BaDonorWeighting weighting,
                                       char *buf,
                                       size_t buf_len);

/**
 * Draws a phone outside the candidate's close set into `buf`.
 *
 * # Safety
 * As for [`ba_close_dict_pick_donor`].
 */
enum BaStatus ba_close_dict_pick_distant(const struct BaCloseDict *dict,
                                         const char *candidate,
                                         struct BaRng *rng,
                                         char *buf,
                                         size_t buf_len);

/**
 * # Safety
 * `samples` must point to `len` doubles and `out` be writable.
 */
enum BaStatus ba_rms(const double *samples, size_t len, double *out);

/**
 * Scales `samples` to RMS `target`, writing `len` values to `out`.
 *
 * # Safety
 * `samples` and `out` must each hold `len` doubles.
 */
enum BaStatus ba_normalize_energy(const double *samples,
                                  size_t len,
                                  uint32_t sample_rate,
                                  double target,
                                  double *out);

/**
 * Writes the per-frame mix curve of a mask. The curve has `min(t, l)`
 * frames (`l` for cut/paste); `written` receives that length, and
 * `BA_STATUS_BUFFER_TOO_SMALL` is returned when `out_len` is short.
 * `params` may be null for defaults.
 *
 * # Safety
 * `out` must hold `out_len` doubles and `written` be writable.
 */
enum BaStatus ba_mask_curve(enum BaTemplate template_,
                            size_t t,
                            size_t l,
                            const struct BaMaskParams *params,
                            double *out,
                            size_t out_len,
                            size_t *written);

/**
 * Label a mask would assign, without any audio.
 *
 * # Safety
 * `params` may be null; `out` must be writable.
 */
enum BaStatus ba_mask_label(enum BaTemplate template_,
                            size_t t,
                            size_t l,
                            const struct BaMaskParams *params,
                            enum BaLabelMode mode,
                            uint8_t *out);

/**
 * Energy-matches the donor, blends it into the candidate under the mask
 * and labels the result. `params` may be null for defaults.
 *
 * # Safety
 * `candidate` must hold `candidate_len` doubles, `donor` `donor_len`, and
 * `out` be writable. Release the result with [`ba_blend_result_free`].
 */
enum BaStatus ba_speech_blend(const double *candidate,
                              size_t candidate_len,
                              const double *donor,
                              size_t donor_len,
                              uint32_t sample_rate,
                              enum BaTemplate template_,
                              const struct BaMaskParams *params,
                              enum BaLabelMode mode,
                              struct BaBlendResult **out);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
size_t ba_blend_result_len(const struct BaBlendResult *result);

/**
 * Blended samples, valid while the handle lives.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
const double *ba_blend_result_samples(const struct BaBlendResult *result);

/**
 * Per-frame λ values, valid while the handle lives; same length as the samples.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
const double *ba_blend_result_lambdas(const struct BaBlendResult *result);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
uint8_t ba_blend_result_label(const struct BaBlendResult *result);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
double ba_blend_result_donor_gain(const struct BaBlendResult *result);

/**
 * # Safety
 * `result` must come from [`ba_speech_blend`] and not be used afterwards.
 */
void ba_blend_result_free(struct BaBlendResult *result);

/**
 * Loads a posterior CSV: a header of 42 phone labels, then one row per frame.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum BaStatus ba_posteriors_load(const char *path, struct BaPosteriors **out);

/**
 * As [`ba_posteriors_load`], from CSV text in memory.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` writable.
 */
enum BaStatus ba_posteriors_parse(const char *text, struct BaPosteriors **out);

/**
 * # Safety
 * `posteriors` must be a live handle or null.
 */
size_t ba_posteriors_frames(const struct BaPosteriors *posteriors);

/**
 * # Safety
 * `posteriors` must come from this library and not be used afterwards.
 */
void ba_posteriors_free(struct BaPosteriors *posteriors);

/**
 * Writes the [`BA_GOP_DIM`]-value GOP vector of `canonical` over frames
 * `[start, end)`: 42 LPP values, then 42 LPR values.
 *
 * # Safety
 * `posteriors` must be live, `canonical` NUL-terminated and `out` hold
 * [`BA_GOP_DIM`] doubles.
 */
enum BaStatus ba_gop_vector(const struct BaPosteriors *posteriors,
                            const char *canonical,
                            size_t start,
                            size_t end,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLENDAUG_H */
