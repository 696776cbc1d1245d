#ifndef WAVECOUPLE_H
#define WAVECOUPLE_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/wavecouple-ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define WC_OK 0

// A required pointer argument was null.
#define WC_ERR_NULL -1

// A string argument was not valid UTF-8.
#define WC_ERR_UTF8 -2

// The library panicked; the handle arguments are left untouched.
#define WC_ERR_PANIC -3

// An enum or index argument was out of range.
#define WC_ERR_RANGE -4

// Library error codes, as returned by `Error::code`.
#define WC_ERR_NO_SOLUTION 1

#define WC_ERR_SINGULAR_SYSTEM 2

#define WC_ERR_EPSILON_TOO_LARGE 3

#define WC_ERR_OUT_OF_DOMAIN 4

#define WC_ERR_CFL_VIOLATION 5

#define WC_ERR_OVERLAPPING_SUPPORTS 6

#define WC_ERR_NO_ADMISSIBLE_DELTA 7

#define WC_ERR_BAD_EPSILON 8

#define WC_ERR_ORDER_TOO_LOW 9

#define WC_ERR_TIME_TOO_SHORT 10

#define WC_ERR_BLOW_UP 11

#define WC_ERR_PICARD_DIVERGED 12

#define WC_ERR_DATA_INCOMPATIBLE 13

#define WC_ERR_FLOOR_VIOLATED 14

#define WC_ERR_NEWTON_STALLED 15

#define WC_ERR_CHARACTERISTIC_EXITS_DOMAIN 16

#define WC_ERR_PARSE 17

#define WC_ERR_IO 18

// Stage selector values accepted by `wc_run`.
typedef enum WcStage {
  WC_STAGE_TRAJECTORY = 0,
  WC_STAGE_COVERING = 1,
  WC_STAGE_STEER = 2,
  WC_STAGE_REDUCE = 3,
  WC_STAGE_GLOBAL = 4,
  WC_STAGE_VERIFY = 5,
} WcStage;

// Opaque outcome of one stage run.
typedef struct WcOutcome WcOutcome;

// Opaque scenario handle.
typedef struct WcScenario WcScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *wc_last_error(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void wc_string_free(char *s);

// The built-in default scenario.
struct WcScenario *wc_scenario_default(void);

// Parses scenario text (`key = value` lines) into `*out`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
int32_t wc_scenario_parse(const char *text, struct WcScenario **out);

// Canonical text of a scenario; free with `wc_string_free`. Null on a
// null handle.
//
// # Safety
// `s` must be a live scenario handle or null.
char *wc_scenario_to_text(const struct WcScenario *s);

// Checks the scenario's parameters and time condition.
//
// # Safety
// `s` must be a live scenario handle or null.
int32_t wc_scenario_validate(const struct WcScenario *s);

// # Safety
// `s` must come from `wc_scenario_default` or `wc_scenario_parse` and not
// have been freed. Null is ignored.
void wc_scenario_free(struct WcScenario *s);

// Runs one stage (a `WcStage` value) on a scenario with `grid_refine`
// dyadic refinements. A stage whose checks fail still returns `WC_OK`;
// inspect the outcome with `wc_outcome_passed`.
//
// # Safety
// `s` must be a live scenario handle and `out` a valid pointer.
int32_t wc_run(const struct WcScenario *s,
               int32_t stage,
               uint32_t grid_refine,
               struct WcOutcome **out);

// 1 when every check passed, 0 otherwise or on a null handle.
//
// # Safety
// `o` must be a live outcome handle or null.
int32_t wc_outcome_passed(const struct WcOutcome *o);

// Number of checks in the outcome.
//
// # Safety
// `o` must be a live outcome handle or null.
uintptr_t wc_outcome_check_count(const struct WcOutcome *o);

// Name and result of check `i`. `name` receives a string to free with
// `wc_string_free`; `pass` receives 1 or 0.
//
// # Safety
// `o` must be a live outcome handle; `name` and `pass` valid pointers.
int32_t wc_outcome_check(const struct WcOutcome *o, uintptr_t i, char **name, int32_t *pass);

// Report value for `key` parsed as a number into `*value`.
//
// # Safety
// `o` must be a live outcome handle, `key` a NUL-terminated string and
// `value` a valid pointer.
int32_t wc_outcome_metric(const struct WcOutcome *o, const char *key, double *value);

// The `key = value` summary the command line writes; free with
// `wc_string_free`.
//
// # Safety
// `o` must be a live outcome handle or null.
char *wc_outcome_summary(const struct WcOutcome *o);

// Contents of the artifact named `name` (for example `covering.csv`), or
// null when the stage produced none by that name. Free with
// `wc_string_free`.
//
// # Safety
// `o` must be a live outcome handle or null; `name` a NUL-terminated string.
char *wc_outcome_artifact(const struct WcOutcome *o, const char *name);

// # Safety
// `o` must come from `wc_run` and not have been freed. Null is ignored.
void wc_outcome_free(struct WcOutcome *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVECOUPLE_H */
