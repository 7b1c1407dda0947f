#ifndef LEXFORGE_H
#define LEXFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define LF_MODE_SINGLE_TOKEN 0

#define LF_MODE_LONGEST_MATCH 1

typedef enum LfStatus {
  LF_STATUS_OK = 0,
  LF_STATUS_NULL_POINTER = 1,
  LF_STATUS_INVALID_UTF8 = 2,
  LF_STATUS_INVALID_ARGUMENT = 3,
  LF_STATUS_IO = 4,
  LF_STATUS_PARSE = 5,
  LF_STATUS_CONFIG = 6,
  LF_STATUS_BACKEND_UNREACHABLE = 7,
  LF_STATUS_DATA = 8,
  LF_STATUS_PANIC = 99,
} LfStatus;

/**
 * Opaque lexicon handle.
 */
typedef struct LfLexicon LfLexicon;

typedef struct LfLexiconStats {
  size_t num_source_words;
  size_t num_distinct_target_words;
  double mean_translations_per_source;
} LfLexiconStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *lf_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next lexforge call on this thread. Do not free.
 */
const char *lf_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void lf_string_free(char *s);

/**
 * Reads a `source<TAB>target` lexicon file.
 *
 * # Safety
 * String arguments must be NULL-terminated; `out` must be writable.
 */
enum LfStatus lf_lexicon_load(const char *path,
                              const char *source_lang,
                              const char *target_lang,
                              struct LfLexicon **out);

/**
 * # Safety
 * String arguments must be NULL-terminated; `out` must be writable.
 */
enum LfStatus lf_lexicon_from_tsv_str(const char *tsv,
                                      const char *source_lang,
                                      const char *target_lang,
                                      struct LfLexicon **out);

/**
 * # Safety
 * `lexicon` must be NULL or a live handle, freed once.
 */
void lf_lexicon_free(struct LfLexicon *lexicon);

/**
 * # Safety
 * `lexicon` must be a live handle; `out` must be writable.
 */
enum LfStatus lf_lexicon_stats(const struct LfLexicon *lexicon, struct LfLexiconStats *out);

/**
 * Translations of `word` as a JSON array, or `null` when absent.
 *
 * # Safety
 * `lexicon` must be a live handle; `word` NULL-terminated; `out` writable.
 */
enum LfStatus lf_lexicon_lookup_json(const struct LfLexicon *lexicon, const char *word, char **out);

/**
 * Tokens of `text` as a JSON array of `{surface, kind, space_before}`.
 *
 * # Safety
 * `text` must be NULL-terminated; `out` writable.
 */
enum LfStatus lf_tokenize_json(const char *text, char **out);

/**
 * Word-for-word translation of one text. `mode` is
 * `LF_MODE_SINGLE_TOKEN` or `LF_MODE_LONGEST_MATCH`.
 *
 * # Safety
 * `lexicon` must be a live handle; `text` NULL-terminated; `out` writable.
 */
enum LfStatus lf_translate_text(const struct LfLexicon *lexicon,
                                const char *text,
                                uint64_t seed,
                                uint32_t mode,
                                char **out);

/**
 * Runs the whole pipeline from a JSON config file. On success `out`
 * receives `{"output_dir", "counts"}`; on failure it receives the
 * `{"error": {...}}` object. `out` may be NULL.
 *
 * # Safety
 * `config_path` must be NULL-terminated; `out` NULL or writable.
 */
enum LfStatus lf_pipeline_run(const char *config_path, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXFORGE_H */
