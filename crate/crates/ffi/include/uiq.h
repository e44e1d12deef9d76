#ifndef UIQ_H
#define UIQ_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Output formats for [`uiq_ranking_render`].
 */
typedef enum UiqFormat {
  UIQ_FORMAT_TABLE = 0,
  UIQ_FORMAT_CSV = 1,
  UIQ_FORMAT_JSON = 2,
} UiqFormat;

/**
 * Result code of every fallible call.
 */
typedef enum UiqStatus {
  UIQ_STATUS_OK = 0,
  UIQ_STATUS_NULL_POINTER = 1,
  UIQ_STATUS_INVALID_UTF8 = 2,
  UIQ_STATUS_PARSE = 3,
  UIQ_STATUS_VALIDATION = 4,
  UIQ_STATUS_MISMATCH = 5,
  UIQ_STATUS_OUT_OF_RANGE = 6,
  UIQ_STATUS_PANIC = 99,
} UiqStatus;

/**
 * A ranked set of IQ reports.
 */
typedef struct UiqRanking UiqRanking;

/**
 * A validated scale definition.
 */
typedef struct UiqScale UiqScale;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *uiq_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void uiq_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *uiq_version(void);

/**
 * Loads and validates a scale from JSON. A null `json` loads the bundled
 * 2014 scale.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be writable.
 */
enum UiqStatus uiq_scale_load(const char *json, struct UiqScale **out);

/**
 * # Safety
 * `scale` must be null or a handle from [`uiq_scale_load`] not yet freed.
 */
void uiq_scale_free(struct UiqScale *scale);

/**
 * Number of subtests in the scale, or 0 for a null handle.
 *
 * # Safety
 * `scale` must be null or a live handle.
 */
uintptr_t uiq_scale_subtest_count(const struct UiqScale *scale);

/**
 * General IQ of one subtest score vector, in hundredths.
 *
 * # Safety
 * `values` must point at `len` readable integers; `out_hundredths` must be writable.
 */
enum UiqStatus uiq_compute_iq(const struct UiqScale *scale,
                              const uint32_t *values,
                              uintptr_t len,
                              int64_t *out_hundredths);

/**
 * Per-category contributions in hundredths, written in the order
 * acquisition, mastery, innovation, feedback.
 *
 * # Safety
 * `values` must point at `len` readable integers; `out4` must have room for four.
 */
enum UiqStatus uiq_category_breakdown(const struct UiqScale *scale,
                                      const uint32_t *values,
                                      uintptr_t len,
                                      int64_t *out4);

/**
 * Scores and ranks one or more raw score tables (JSON documents with
 * `scale_id` and `rows`). `tables` holds `count` strings.
 *
 * # Safety
 * `tables` must point at `count` NUL-terminated strings; `out` must be writable.
 */
enum UiqStatus uiq_rank_matrix(const struct UiqScale *scale,
                               const char *const *tables,
                               uintptr_t count,
                               const char *run_id,
                               struct UiqRanking **out);

/**
 * # Safety
 * `ranking` must be null or a handle from [`uiq_rank_matrix`] not yet freed.
 */
void uiq_ranking_free(struct UiqRanking *ranking);

/**
 * Number of ranked subjects, or 0 for a null handle.
 *
 * # Safety
 * `ranking` must be null or a live handle.
 */
uintptr_t uiq_ranking_len(const struct UiqRanking *ranking);

/**
 * IQ (hundredths) and subject id of the entry at `index` (0 is first place).
 * The id string must be freed with [`uiq_string_free`]; pass null to skip it.
 *
 * # Safety
 * `ranking` must be a live handle; non-null out pointers must be writable.
 */
enum UiqStatus uiq_ranking_entry(const struct UiqRanking *ranking,
                                 uintptr_t index,
                                 int64_t *out_iq_hundredths,
                                 char **out_subject_id);

/**
 * Renders the ranking as text. Free the result with [`uiq_string_free`].
 *
 * # Safety
 * `ranking` must be a live handle; `out` must be writable.
 */
enum UiqStatus uiq_ranking_render(const struct UiqRanking *ranking,
                                  enum UiqFormat format,
                                  char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UIQ_H */
