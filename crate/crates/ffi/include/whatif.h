#ifndef WHATIF_H
#define WHATIF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values are stable.
 */
typedef enum WhatifStatus {
  WHATIF_STATUS_OK = 0,
  WHATIF_STATUS_NULL_ARGUMENT = 1,
  WHATIF_STATUS_INVALID_UTF8 = 2,
  WHATIF_STATUS_PANIC = 3,
  WHATIF_STATUS_INVALID_SCHEMA = 10,
  WHATIF_STATUS_SCHEMA_MISMATCH = 11,
  WHATIF_STATUS_UNKNOWN_DIMENSION = 12,
  WHATIF_STATUS_UNKNOWN_MEASURE = 13,
  WHATIF_STATUS_UNKNOWN_VALUE = 14,
  WHATIF_STATUS_WRONG_DIMENSION = 15,
  WHATIF_STATUS_UNKNOWN_SCENARIO = 16,
  WHATIF_STATUS_NAME_COLLISION = 17,
  WHATIF_STATUS_SELF_REFERENCE = 18,
  WHATIF_STATUS_EMPTY_RESOLUTION = 19,
  WHATIF_STATUS_EMPTY_SELECTION = 20,
  WHATIF_STATUS_SCENARIO_IN_REAL_QUERY = 21,
  WHATIF_STATUS_NON_FINITE_FACTOR = 22,
  WHATIF_STATUS_MISSING_KEY = 23,
  WHATIF_STATUS_INDEX_OUT_OF_RANGE = 24,
  WHATIF_STATUS_MISSING_COLUMN = 25,
  WHATIF_STATUS_MEASURE_PARSE = 26,
  WHATIF_STATUS_DUPLICATE_VALUE = 27,
  WHATIF_STATUS_CSV = 28,
  WHATIF_STATUS_MALFORMED_DOCUMENT = 29,
  WHATIF_STATUS_QUERY_PARSE = 30,
  WHATIF_STATUS_NO_CUBE = 31,
} WhatifStatus;

/**
 * Opaque session handle.
 */
typedef struct WhatifSession WhatifSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an empty session. Free it with `whatif_session_free`.
 */
struct WhatifSession *whatif_session_new(void);

/**
 * # Safety
 * `session` must come from `whatif_session_new` and not be used afterwards.
 * Null is ignored.
 */
void whatif_session_free(struct WhatifSession *session);

/**
 * Message of the last failed call on `session`, or null after a success.
 * Owned by the session; valid until the next call on it.
 *
 * # Safety
 * `session` must be a live handle or null.
 */
const char *whatif_last_error(const struct WhatifSession *session);

/**
 * Counter bumped by every successful change; 0 for a null handle.
 *
 * # Safety
 * `session` must be a live handle or null.
 */
uint64_t whatif_revision(const struct WhatifSession *session);

/**
 * Loads a cube from CSV text. `manifest_json` is
 * `{"dimensions": [...], "measures": [...]}`. Clears all scenarios.
 *
 * # Safety
 * `session` must be a live handle; strings must be NUL-terminated.
 */
enum WhatifStatus whatif_load_cube(struct WhatifSession *session,
                                   const char *manifest_json,
                                   const char *csv);

/**
 * # Safety
 * `session` must be a live handle; strings must be NUL-terminated.
 */
enum WhatifStatus whatif_create_scenario(struct WhatifSession *session,
                                         const char *value,
                                         const char *dimension);

/**
 * # Safety
 * `session` must be a live handle; `value` must be NUL-terminated.
 */
enum WhatifStatus whatif_delete_scenario(struct WhatifSession *session, const char *value);

/**
 * Associates `query` (text form, e.g. `Year=2011;Supplier=SU1`) with
 * scenario `target`. `measures[i]` gets factor `factors[i]`; unlisted
 * measures keep factor 1. `count` may be 0 with null arrays.
 *
 * # Safety
 * `session` must be a live handle; strings must be NUL-terminated; the two
 * arrays must hold `count` elements each.
 */
enum WhatifStatus whatif_associate(struct WhatifSession *session,
                                   const char *target,
                                   const char *query,
                                   const char *const *measures,
                                   const double *factors,
                                   size_t count);

/**
 * Removes the entry at `index` (insertion order) from scenario `target`.
 *
 * # Safety
 * `session` must be a live handle; `target` must be NUL-terminated.
 */
enum WhatifStatus whatif_remove_entry(struct WhatifSession *session,
                                      const char *target,
                                      size_t index);

/**
 * Evaluates one aggregate (`sum:Volume*Cost`, `avg:Cost`, ...). On success
 * `*present` tells whether the aggregate has a value (avg, min and max over
 * no rows have none) and `*out` holds it.
 *
 * # Safety
 * `session` must be a live handle; strings must be NUL-terminated; `out`
 * and `present` must be valid for writes.
 */
enum WhatifStatus whatif_evaluate(struct WhatifSession *session,
                                  const char *query,
                                  const char *spec,
                                  double *out,
                                  bool *present);

/**
 * Selected rows as CSV. Free `*out` with `whatif_string_free`.
 *
 * # Safety
 * `session` must be a live handle; `query` must be NUL-terminated; `out`
 * must be valid for writes.
 */
enum WhatifStatus whatif_materialize_csv(struct WhatifSession *session,
                                         const char *query,
                                         char **out);

/**
 * Scenario store as JSON. Free `*out` with `whatif_string_free`.
 *
 * # Safety
 * `session` must be a live handle; `out` must be valid for writes.
 */
enum WhatifStatus whatif_store_save(struct WhatifSession *session, char **out);

/**
 * Replaces the scenario store from JSON; on failure the old one stays.
 *
 * # Safety
 * `session` must be a live handle; `json` must be NUL-terminated.
 */
enum WhatifStatus whatif_store_load(struct WhatifSession *session, const char *json);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void whatif_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WHATIF_H */
