#ifndef SQLFIX_H
#define SQLFIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
enum SqlfixStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SQLFIX_STATUS_OK = 0,
  SQLFIX_STATUS_NULL_ARGUMENT = 1,
  SQLFIX_STATUS_INVALID_UTF8 = 2,
  SQLFIX_STATUS_INVALID_ARGUMENT = 3,
  SQLFIX_STATUS_PARSE_ERROR = 4,
  SQLFIX_STATUS_PANIC = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SqlfixStatus SqlfixStatus;
#else
typedef int32_t SqlfixStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum SqlfixVerdict
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SQLFIX_VERDICT_EQUIVALENT = 0,
  SQLFIX_VERDICT_DIFFERENT = 1,
  SQLFIX_VERDICT_PREDICTION_PARSE_ERROR = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SqlfixVerdict SqlfixVerdict;
#else
typedef int32_t SqlfixVerdict;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Line class codes used in class arrays.
 */
enum SqlfixLineClass
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint8_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SQLFIX_LINE_CLASS_CONSISTENT = 0,
  SQLFIX_LINE_CLASS_DIFF = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SqlfixLineClass SqlfixLineClass;
#else
typedef uint8_t SqlfixLineClass;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Line diff of a correct SQL against its bug SQL.
 */
typedef struct SqlfixLineDiff SqlfixLineDiff;

/**
 * Compiled classification rules.
 */
typedef struct SqlfixTaxonomy SqlfixTaxonomy;

/**
 * Masked loss split into consistent-line and diff-line parts.
 */
typedef struct {
  double l1;
  double l2;
  double total;
  double per_token;
  size_t unmasked_token_count;
} SqlfixLoss;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sqlfix_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sqlfix_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void sqlfix_string_free(char *s);

/**
 * Computes the line diff of `correct_sql` against `bug_sql`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
SqlfixStatus sqlfix_line_diff_new(const char *bug_sql,
                                  const char *correct_sql,
                                  SqlfixLineDiff **out);

/**
 * # Safety
 * `diff` must come from [`sqlfix_line_diff_new`] or be NULL.
 */
void sqlfix_line_diff_free(SqlfixLineDiff *diff);

/**
 * Writes the number of correct-SQL lines and how many of them are diff
 * lines. Either out-pointer may be NULL.
 *
 * # Safety
 * `diff` must be a live handle; non-NULL out-pointers must be writable.
 */
SqlfixStatus sqlfix_line_diff_counts(const SqlfixLineDiff *diff,
                                     size_t *out_lines,
                                     size_t *out_diff_lines);

/**
 * Writes one `SqlfixLineClass` code per line into `out`, which must hold
 * exactly the line count.
 *
 * # Safety
 * `out` must point to `len` writable bytes.
 */
SqlfixStatus sqlfix_line_diff_classes(const SqlfixLineDiff *diff, uint8_t *out, size_t len);

/**
 * Samples the line mask for mask ratio `p` and `seed`, writing one weight
 * (0 or 1) per line into `out`, which must hold exactly the line count.
 *
 * # Safety
 * `out` must point to `len` writable bytes.
 */
SqlfixStatus sqlfix_line_diff_mask(const SqlfixLineDiff *diff,
                                   double p,
                                   uint64_t seed,
                                   uint8_t *out,
                                   size_t len);

/**
 * Masked loss over `n` tokens. `classes` holds `SqlfixLineClass` codes.
 *
 * # Safety
 * Each array must hold `n` elements; `out` must be writable.
 */
SqlfixStatus sqlfix_masked_loss(const double *logprobs,
                                const uint8_t *weights,
                                const uint8_t *classes,
                                size_t n,
                                SqlfixLoss *out);

/**
 * Compiles a taxonomy from its TOML text.
 *
 * # Safety
 * `toml` must be NUL-terminated; `out` must be writable.
 */
SqlfixStatus sqlfix_taxonomy_from_toml(const char *toml, SqlfixTaxonomy **out);

/**
 * # Safety
 * `taxonomy` must come from [`sqlfix_taxonomy_from_toml`] or be NULL.
 */
void sqlfix_taxonomy_free(SqlfixTaxonomy *taxonomy);

/**
 * Classifies a bug and writes its path as `"level1 / level2 / level3"`.
 *
 * # Safety
 * `taxonomy` must be a live handle; strings NUL-terminated; `out` writable.
 */
SqlfixStatus sqlfix_taxonomy_classify(const SqlfixTaxonomy *taxonomy,
                                      const char *error_message,
                                      const char *bug_sql,
                                      char **out);

/**
 * Judges `prediction` against `n` ground truths by normalized AST equality.
 * `dialect` may be NULL for the default (spark). When `out_detail` is not
 * NULL it receives the difference summary or parse error, or NULL for an
 * equivalent prediction.
 *
 * # Safety
 * `ground_truths` must hold `n` NUL-terminated strings; out-pointers must
 * be writable.
 */
SqlfixStatus sqlfix_judge(const char *prediction,
                          const char *const *ground_truths,
                          size_t n,
                          const char *dialect,
                          SqlfixVerdict *out_verdict,
                          char **out_detail);

/**
 * Renders the bug-fixing model input for one bug.
 *
 * # Safety
 * `schema_ddl` must hold `n_schema` NUL-terminated strings; `out` writable.
 */
SqlfixStatus sqlfix_render_fix_prompt(const char *const *schema_ddl,
                                      size_t n_schema,
                                      const char *bug_sql,
                                      const char *error_message,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQLFIX_H */
