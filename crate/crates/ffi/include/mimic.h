#ifndef MIMIC_H
#define MIMIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MIMIC_STATUS_OK = 0,
  MIMIC_STATUS_NULL_POINTER = 1,
  MIMIC_STATUS_INVALID_UTF8 = 2,
  MIMIC_STATUS_INVALID_INPUT = 3,
  MIMIC_STATUS_IO = 4,
  MIMIC_STATUS_OUT_OF_RANGE = 5,
  MIMIC_STATUS_INTERNAL = 6,
} MimicStatus;

/**
 * A loaded interaction model.
 */
typedef struct MimicModel MimicModel;

/**
 * A running simulator session.
 */
typedef struct MimicSim MimicSim;

/**
 * A parsed UI state.
 */
typedef struct MimicState MimicState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *mimic_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void mimic_string_free(char *s);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
MimicStatus mimic_state_from_json(const char *json, MimicState **out);

/**
 * # Safety
 * `state` must come from [`mimic_state_from_json`]; `out` must be writable.
 */
MimicStatus mimic_state_fingerprint(const MimicState *state, uint64_t *out);

/**
 * JSON array of the state's enumerable actions, in canonical order.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
MimicStatus mimic_state_actions_json(const MimicState *state, char **out);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void mimic_state_free(MimicState *state);

/**
 * Gesture kind of a single pointer session under the default thresholds,
 * as an index into touch, long touch, swipe up, down, left, right.
 *
 * # Safety
 * `out_kind` must be writable.
 */
MimicStatus mimic_classify_session(int32_t x0,
                                   int32_t y0,
                                   int32_t x1,
                                   int32_t y1,
                                   int64_t duration_ms,
                                   uint32_t *out_kind);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
MimicStatus mimic_model_load(const char *path, MimicModel **out);

/**
 * JSON array of scores, one per action of [`mimic_state_actions_json`],
 * for the state seen without history.
 *
 * # Safety
 * `model` and `state` must be live handles; `out` must be writable.
 */
MimicStatus mimic_model_score(const MimicModel *model, const MimicState *state, char **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void mimic_model_free(MimicModel *model);

/**
 * Starts a session on a simulated app given as its JSON spec.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be writable.
 */
MimicStatus mimic_sim_load(const char *spec_json, uint64_t seed, MimicSim **out);

/**
 * Performs the `action_index`-th enumerable action of the current state.
 * Writes the new state's fingerprint and whether it is a target; either
 * out pointer may be null.
 *
 * # Safety
 * `sim` must be a live handle; non-null out pointers must be writable.
 */
MimicStatus mimic_sim_step(MimicSim *sim,
                           uintptr_t action_index,
                           uint64_t *out_fingerprint,
                           bool *out_is_target);

/**
 * # Safety
 * `sim` must be a live handle.
 */
MimicStatus mimic_sim_reset(MimicSim *sim);

/**
 * The current state as JSON, loadable with [`mimic_state_from_json`].
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
MimicStatus mimic_sim_current_json(const MimicSim *sim, char **out);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void mimic_sim_free(MimicSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIMIC_H */
