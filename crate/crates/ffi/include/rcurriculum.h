#ifndef RCURRICULUM_H
#define RCURRICULUM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_ARGUMENT = 2,
  RC_STATUS_NON_FINITE = 3,
  RC_STATUS_INSUFFICIENT = 4,
  RC_STATUS_ENV_ERROR = 5,
  RC_STATUS_DIVERGENCE = 6,
  RC_STATUS_INVALID_STATE = 7,
  RC_STATUS_MALFORMED = 8,
  RC_STATUS_IO = 9,
  RC_STATUS_BUFFER_TOO_SMALL = 10,
  RC_STATUS_PANIC = 11,
} RcStatus;

typedef enum RcSchedule {
  RC_SCHEDULE_STEP = 0,
  RC_SCHEDULE_LINEAR = 1,
  RC_SCHEDULE_COSINE = 2,
} RcSchedule;

typedef enum RcCriterion {
  RC_CRITERION_ACTOR_FIT = 0,
  RC_CRITERION_BASE_THRESHOLD = 1,
  RC_CRITERION_CONVERGENCE = 2,
  /**
   * Switch at the step given alongside the criterion.
   */
  RC_CRITERION_FIXED = 3,
} RcCriterion;

typedef enum RcEnvKind {
  RC_ENV_KIND_POINT_GOAL = 0,
  RC_ENV_KIND_SWING_UP = 1,
} RcEnvKind;

typedef enum RcOutcome {
  RC_OUTCOME_RUNNING = 0,
  RC_OUTCOME_GOAL = 1,
  RC_OUTCOME_TIMEOUT = 2,
  RC_OUTCOME_COLLISION = 3,
} RcOutcome;

/**
 * Curriculum phase state plus its metric history.
 */
typedef struct RcCurriculum RcCurriculum;

/**
 * A built-in environment with its own reset stream.
 */
typedef struct RcEnv RcEnv;

/**
 * A deterministic policy read from an agent checkpoint.
 */
typedef struct RcPolicy RcPolicy;

/**
 * Reward channels and flags of one environment step.
 */
typedef struct RcStepResult {
  double r_fixed;
  double r_base;
  double r_aux;
  bool terminated;
  bool truncated;
  enum RcOutcome outcome;
} RcStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and
 * truncated to `len` bytes. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t rc_last_error_message(char *buf, size_t len);

/**
 * `r_fixed + (1 - w) r_base + w r_aux`. Fails unless `w` is in `[0, 1]`.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum RcStatus rc_compose_reward(double r_fixed, double r_base, double r_aux, double w, double *out);

/**
 * Annealing factor in `[0, 1]` after `elapsed` of `duration` steps.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum RcStatus rc_anneal_factor(enum RcSchedule s, uint64_t elapsed, uint64_t duration, double *out);

/**
 * Huber-regression slope of `ys` against `0, 1, ..., n - 1`.
 *
 * # Safety
 * `ys` must point to `n` readable values; `out` must be null or valid for
 * one write.
 */
enum RcStatus rc_huber_slope(const double *ys, size_t n, double epsilon, double *out);

/**
 * Velocity-tracking reward term for speed `v`.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum RcStatus rc_reward_velocity(double v, double v_ref, double v_max, double kappa, double *out);

/**
 * Creates a curriculum in phase 0 with default metric cadence, smoothing
 * and switch thresholds. `fixed_at` is read only for [`RcCriterion::Fixed`].
 * `init_steps` is the random warm-up length that defines the improvement
 * baseline.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum RcStatus rc_curriculum_new(double w_target,
                                enum RcSchedule s,
                                uint64_t anneal_steps,
                                enum RcCriterion criterion,
                                uint64_t fixed_at,
                                uint64_t init_steps,
                                struct RcCurriculum **out);

/**
 * # Safety
 * `h` must be null or a handle from [`rc_curriculum_new`] not yet freed.
 */
void rc_curriculum_free(struct RcCurriculum *h);

/**
 * Records one environment step. `has_actor_loss` selects whether
 * `actor_loss` is used. `closed` receives whether a cadence window ended.
 *
 * # Safety
 * `h` must be a live handle; `closed` must be null or valid for one write.
 */
enum RcStatus rc_curriculum_record(struct RcCurriculum *h,
                                   uint64_t step,
                                   double r_base,
                                   double actor_loss,
                                   bool has_actor_loss,
                                   bool *closed);

/**
 * Whether the configured switch predicate holds at step `t`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be null or valid for one write.
 */
enum RcStatus rc_curriculum_should_switch(struct RcCurriculum *h, uint64_t t, bool *out);

/**
 * Enters phase 1 at step `t`. A second call fails with
 * [`RcStatus::InvalidState`].
 *
 * # Safety
 * `h` must be a live handle.
 */
enum RcStatus rc_curriculum_switch_at(struct RcCurriculum *h, uint64_t t);

/**
 * Curriculum weight at step `t`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be null or valid for one write.
 */
enum RcStatus rc_curriculum_weight(struct RcCurriculum *h, uint64_t t, double *out);

/**
 * Current phase, 0 or 1.
 *
 * # Safety
 * `h` must be a live handle; `out` must be null or valid for one write.
 */
enum RcStatus rc_curriculum_phase(struct RcCurriculum *h, uint8_t *out);

/**
 * Creates an environment with default parameters whose resets draw from
 * `seed`.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum RcStatus rc_env_new(enum RcEnvKind kind, uint64_t seed, struct RcEnv **out);

/**
 * # Safety
 * `h` must be null or a handle from [`rc_env_new`] not yet freed.
 */
void rc_env_free(struct RcEnv *h);

/**
 * Observation length, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t rc_env_obs_dim(const struct RcEnv *h);

/**
 * Action length, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t rc_env_act_dim(const struct RcEnv *h);

/**
 * Starts an episode and writes the first observation.
 *
 * # Safety
 * `h` must be a live handle; `obs` must point to `obs_len` writable values.
 */
enum RcStatus rc_env_reset(struct RcEnv *h, double *obs, size_t obs_len);

/**
 * Advances one step with `action` and writes the next observation and the
 * step result.
 *
 * # Safety
 * `h` must be a live handle; `action` must point to `act_len` values;
 * `obs` to `obs_len` writable values; `result` must be null or valid for
 * one write.
 */
enum RcStatus rc_env_step(struct RcEnv *h,
                          const double *action,
                          size_t act_len,
                          double *obs,
                          size_t obs_len,
                          struct RcStepResult *result);

/**
 * Reads the actor from an agent checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be null or
 * valid for one write.
 */
enum RcStatus rc_policy_load(const char *path, struct RcPolicy **out);

/**
 * # Safety
 * `h` must be null or a handle from [`rc_policy_load`] not yet freed.
 */
void rc_policy_free(struct RcPolicy *h);

/**
 * Action length, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t rc_policy_act_dim(const struct RcPolicy *h);

/**
 * Deterministic action for `obs`.
 *
 * # Safety
 * `h` must be a live handle; `obs` must point to `obs_len` values and
 * `action` to `act_len` writable values.
 */
enum RcStatus rc_policy_act(struct RcPolicy *h,
                            const double *obs,
                            size_t obs_len,
                            double *action,
                            size_t act_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCURRICULUM_H */
