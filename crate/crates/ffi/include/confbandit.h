#ifndef CONFBANDIT_H
#define CONFBANDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_ARGUMENT = 2,
  CB_STATUS_OUT_OF_BOUNDS = 3,
  CB_STATUS_IO = 4,
  CB_STATUS_FORMAT = 5,
  CB_STATUS_CHECKPOINT = 6,
  CB_STATUS_ENVIRONMENT = 7,
  CB_STATUS_INTERNAL = 8,
} CbStatus;

typedef enum CbAxis {
  CB_AXIS_INSTRUCTION = 0,
  CB_AXIS_TEMPERATURE = 1,
  CB_AXIS_STEPS = 2,
} CbAxis;

// Opaque trained policy with its space and embedder.
typedef struct CbPolicy CbPolicy;

// Opaque action space.
typedef struct CbSpace CbSpace;

// Indices into the three axes of a space.
typedef struct CbTriple {
  size_t instruction_index;
  size_t temperature_index;
  size_t steps_index;
} CbTriple;

// A resolved triple. `instruction` is owned by the caller.
typedef struct CbRendered {
  char *instruction;
  double temperature;
  uint32_t steps;
} CbRendered;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. Valid until the next
// failing call on the same thread; never null.
const char *cb_last_error_message(void);

// Library version, statically allocated.
const char *cb_version(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void cb_string_free(char *s);

// The built-in 100 × 11 × 8 space.
//
// # Safety
// `out` must be a valid pointer.
enum CbStatus cb_space_default(struct CbSpace **out);

// # Safety
// `space` must be null or a handle from [`cb_space_default`], not yet freed.
void cb_space_free(struct CbSpace *space);

// Number of values on one axis.
//
// # Safety
// Pointers must be valid.
enum CbStatus cb_space_axis_len(const struct CbSpace *space, enum CbAxis axis, size_t *out);

// Number of joint configurations.
//
// # Safety
// Pointers must be valid.
enum CbStatus cb_space_cardinality(const struct CbSpace *space, size_t *out);

// Look up the concrete instruction, temperature and step count.
//
// # Safety
// Pointers must be valid. Free `out->instruction` with [`cb_string_free`].
enum CbStatus cb_space_resolve(const struct CbSpace *space,
                               struct CbTriple triple,
                               struct CbRendered *out);

// Generation prompt for `question` under `triple`.
//
// # Safety
// Pointers must be valid; `question` NUL-terminated UTF-8. Free `*out`
// with [`cb_string_free`].
enum CbStatus cb_render_prompt(const struct CbSpace *space,
                               struct CbTriple triple,
                               const char *question,
                               char **out);

// Load a checkpoint file.
//
// # Safety
// `path` must be NUL-terminated UTF-8 and `out` valid.
enum CbStatus cb_policy_load(const char *path, struct CbPolicy **out);

// # Safety
// `policy` must be null or a handle from [`cb_policy_load`], not yet freed.
void cb_policy_free(struct CbPolicy *policy);

// The policy's space, borrowed; valid while `policy` is alive. Null if
// `policy` is null.
//
// # Safety
// `policy` must be null or a live handle.
const struct CbSpace *cb_policy_space(const struct CbPolicy *policy);

// Most probable configuration for `question`.
//
// # Safety
// Pointers must be valid; `question` NUL-terminated UTF-8.
enum CbStatus cb_policy_greedy(const struct CbPolicy *policy,
                               const char *question,
                               struct CbTriple *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFBANDIT_H */
