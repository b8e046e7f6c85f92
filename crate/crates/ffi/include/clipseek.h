#ifndef CLIPSEEK_H
#define CLIPSEEK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

#define CLIPSEEK_LABEL_QUOTE_SPEECH 0

#define CLIPSEEK_LABEL_VISUAL 1

typedef enum ClipseekStatus {
  CLIPSEEK_STATUS_OK = 0,
  /**
   * Null pointer or non-UTF-8 string argument.
   */
  CLIPSEEK_STATUS_INVALID_ARGUMENT = 1,
  CLIPSEEK_STATUS_VALIDATION = 2,
  CLIPSEEK_STATUS_UNKNOWN_METHOD = 3,
  CLIPSEEK_STATUS_NOT_BOUND = 4,
  CLIPSEEK_STATUS_UNENCODABLE = 5,
  CLIPSEEK_STATUS_CONFIG = 6,
  CLIPSEEK_STATUS_IO = 7,
  CLIPSEEK_STATUS_INTERNAL = 8,
} ClipseekStatus;

/**
 * Opaque engine handle.
 */
typedef struct ClipseekEngine ClipseekEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Opens an engine from a `methods.json` file or a directory containing one.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum ClipseekStatus clipseek_engine_open(const char *path, struct ClipseekEngine **out);

/**
 * # Safety
 * `engine` must come from [`clipseek_engine_open`] and not be used again.
 */
void clipseek_engine_free(struct ClipseekEngine *engine);

/**
 * Number of clips in the engine's corpus, or 0 for a null handle.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
size_t clipseek_corpus_size(const struct ClipseekEngine *engine);

/**
 * Runs a routed search and returns the response as JSON, the same body the
 * HTTP `/search` endpoint serves. `k = 0` selects the default of 3.
 *
 * # Safety
 * Pointers must be valid; `out_json` receives a string to free with
 * [`clipseek_string_free`].
 */
enum ClipseekStatus clipseek_search_json(const struct ClipseekEngine *engine,
                                         const char *method,
                                         const char *query,
                                         uint32_t k,
                                         char **out_json);

/**
 * Query type under the engine's routing policy (the trained classifier if
 * bound, the quote rules otherwise).
 *
 * # Safety
 * Pointers must be valid; `out_confidence` may be null.
 */
enum ClipseekStatus clipseek_classify(const struct ClipseekEngine *engine,
                                      const char *query,
                                      int32_t *out_label,
                                      double *out_confidence);

/**
 * Quote-rule label of `text`: 0 quote/speech, 1 visual, -1 on a bad
 * argument.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string.
 */
int32_t clipseek_rule_label(const char *text);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *clipseek_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void clipseek_string_free(char *s);

const char *clipseek_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLIPSEEK_H */
