#ifndef FEPKIT_H
#define FEPKIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Observation length.
 */
#define FEP_OBS_DIM 7

typedef enum FepMode {
  FEP_MODE_NONE = 0,
  FEP_MODE_CLASSICAL = 1,
  FEP_MODE_RL = 2,
} FepMode;

typedef enum FepStatus {
  FEP_STATUS_OK = 0,
  FEP_STATUS_NULL_POINTER = 1,
  FEP_STATUS_INVALID_ARGUMENT = 2,
  FEP_STATUS_CONFIG = 3,
  FEP_STATUS_TRIM = 4,
  FEP_STATUS_SIMULATION = 5,
  FEP_STATUS_EPISODE_FINISHED = 6,
  FEP_STATUS_CHECKPOINT = 7,
  FEP_STATUS_PANIC = 8,
} FepStatus;

typedef enum FepTermination {
  FEP_TERMINATION_RUNNING = 0,
  FEP_TERMINATION_SUSTAINED = 1,
  FEP_TERMINATION_GROSS = 2,
  FEP_TERMINATION_INTEGRITY = 3,
} FepTermination;

/**
 * Opaque agent handle.
 */
typedef struct FepAgent FepAgent;

/**
 * Opaque environment handle.
 */
typedef struct FepEnv FepEnv;

/**
 * Result of one environment step.
 */
typedef struct FepStep {
  double observation[FEP_OBS_DIM];
  double reward;
  enum FepTermination termination;
  /**
   * Nonzero when the time limit ended the episode.
   */
  uint8_t truncated;
  /**
   * Commanded pitch rate after protection, deg/s.
   */
  double q_cmd;
  double alpha_deg;
  double nz;
} FepStep;

/**
 * Level-flight trim point.
 */
typedef struct FepTrim {
  double airspeed;
  double alpha_deg;
  double tail_deg;
  double throttle;
  double thrust;
  double max_residual;
} FepTrim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *fep_last_error(void);

/**
 * Creates an environment from a TOML configuration (NULL for defaults).
 *
 * # Safety
 * `config_toml` must be NULL or a NUL-terminated string; `out` must be a
 * valid pointer.
 */
enum FepStatus fep_env_new(const char *config_toml, enum FepMode mode, struct FepEnv **out);

/**
 * Starts an episode with constant roll and pitch commands (deg/s) and writes
 * the normalized observation to `obs` (FEP_OBS_DIM values).
 *
 * # Safety
 * `env` must come from `fep_env_new`; `obs` must hold FEP_OBS_DIM doubles.
 */
enum FepStatus fep_env_reset(struct FepEnv *env, double p_cmd, double q_cmd, double *obs);

/**
 * Advances one agent step with a restorative pitch rate in deg/s (ignored
 * outside rl mode).
 *
 * # Safety
 * `env` must come from `fep_env_new`; `out` must be a valid pointer.
 */
enum FepStatus fep_env_step(struct FepEnv *env, double q_rest, struct FepStep *out);

/**
 * Maps an action in [-1, 1] to the restorative pitch rate, deg/s.
 *
 * # Safety
 * `env` must come from `fep_env_new`; `q_rest` must be a valid pointer.
 */
enum FepStatus fep_env_action_to_rate(const struct FepEnv *env, double action, double *q_rest);

/**
 * Makes the environment scale observations the way `agent` was trained.
 *
 * # Safety
 * Both handles must be live.
 */
enum FepStatus fep_env_use_agent_scaling(struct FepEnv *env, const struct FepAgent *agent);

/**
 * # Safety
 * `env` must be NULL or come from `fep_env_new`, and not be used afterwards.
 */
void fep_env_free(struct FepEnv *env);

/**
 * Loads a trained agent checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum FepStatus fep_agent_load(const char *path, struct FepAgent **out);

/**
 * Deterministic policy output in [-1, 1] for a normalized observation.
 *
 * # Safety
 * `agent` must be live; `obs` must hold `len` doubles; `action` must be valid.
 */
enum FepStatus fep_agent_act(const struct FepAgent *agent,
                             const double *obs,
                             size_t len,
                             double *action);

/**
 * # Safety
 * `agent` must be NULL or come from `fep_agent_load`, and not be used afterwards.
 */
void fep_agent_free(struct FepAgent *agent);

/**
 * Trims the default airframe for wings-level flight.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FepStatus fep_trim(double mach, double altitude, struct FepTrim *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEPKIT_H */
