#ifndef INPG_H
#define INPG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InpgStatus {
  INPG_STATUS_OK = 0,
  INPG_STATUS_NULL_POINTER = 1,
  INPG_STATUS_INVALID_ARGUMENT = 2,
  INPG_STATUS_CAPACITY = 3,
  INPG_STATUS_DIMENSION_MISMATCH = 4,
  INPG_STATUS_MONOTONICITY_VIOLATION = 5,
  INPG_STATUS_FORMAT = 6,
  INPG_STATUS_IO = 7,
  INPG_STATUS_ORACLE_SCALE = 8,
  INPG_STATUS_OUT_OF_RANGE = 9,
  INPG_STATUS_PANIC = 10,
} InpgStatus;

typedef enum InpgMethod {
  INPG_METHOD_NPG = 0,
  INPG_METHOD_MWU = 1,
  INPG_METHOD_PG_DIRECT = 2,
} InpgMethod;

/**
 * Opaque game handle.
 */
typedef struct InpgGame InpgGame;

/**
 * Opaque joint-policy handle.
 */
typedef struct InpgPolicy InpgPolicy;

/**
 * Opaque run-log handle.
 */
typedef struct InpgRunLog InpgRunLog;

/**
 * Run parameters. `eta <= 0` selects the default step size.
 */
typedef struct InpgRunConfig {
  enum InpgMethod method;
  double tau;
  double eta;
  uint64_t max_iters;
  uint64_t seed;
  uint64_t log_every;
  bool monotonicity_check;
} InpgRunConfig;

typedef struct InpgIterateRecord {
  uint64_t iter;
  double phi_tau;
  double ne_gap;
  double qre_gap;
  double jeffrey_step;
  double avg_ne_gap;
  double avg_qre_gap;
} InpgIterateRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `inpg_*` call on the same thread.
 */
const char *inpg_last_error(void);

/**
 * Random identical-interest game with Beta(1/2, 1/2) potential.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum InpgStatus inpg_game_identical(size_t num_agents,
                                    size_t num_actions,
                                    uint64_t seed,
                                    struct InpgGame **out);

/**
 * Random potential game with per-agent dummy terms.
 *
 * # Safety
 * As for [`inpg_game_identical`].
 */
enum InpgStatus inpg_game_general(size_t num_agents,
                                  size_t num_actions,
                                  uint64_t seed,
                                  struct InpgGame **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` as for [`inpg_game_identical`].
 */
enum InpgStatus inpg_game_load(const char *path, struct InpgGame **out);

/**
 * # Safety
 * `game` must come from an `inpg_game_*` constructor; `path` NUL-terminated.
 */
enum InpgStatus inpg_game_save(const struct InpgGame *game, const char *path);

/**
 * # Safety
 * `game` must be null or a live handle; it is invalid afterwards.
 */
void inpg_game_free(struct InpgGame *game);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `game` must be null or a live handle.
 */
size_t inpg_game_num_agents(const struct InpgGame *game);

/**
 * # Safety
 * `game` must be null or a live handle.
 */
size_t inpg_game_num_actions(const struct InpgGame *game);

/**
 * Declared upper bound of the potential, NaN for a null handle.
 *
 * # Safety
 * `game` must be null or a live handle.
 */
double inpg_game_phi_max(const struct InpgGame *game);

/**
 * Scans the unilateral-deviation identity; writes whether it holds within
 * `tol` and the largest residual.
 *
 * # Safety
 * `game` must be a live handle; outputs must be writable.
 */
enum InpgStatus inpg_game_check_potential(const struct InpgGame *game,
                                          double tol,
                                          bool *holds,
                                          double *max_residual);

/**
 * # Safety
 * `out` must be writable.
 */
enum InpgStatus inpg_policy_uniform(size_t num_agents, size_t num_actions, struct InpgPolicy **out);

/**
 * Policy from `num_agents * num_actions` row-major nonnegative weights;
 * each row is normalized.
 *
 * # Safety
 * `probs` must point to that many doubles; `out` must be writable.
 */
enum InpgStatus inpg_policy_from_probs(size_t num_agents,
                                       size_t num_actions,
                                       const double *probs,
                                       struct InpgPolicy **out);

/**
 * Copies the probabilities, row-major, into `out` of length `len`, which
 * must equal `num_agents * num_actions`.
 *
 * # Safety
 * `policy` must be live; `out` must hold `len` doubles.
 */
enum InpgStatus inpg_policy_probs(const struct InpgPolicy *policy, double *out, size_t len);

/**
 * # Safety
 * `policy` must be null or a live handle; it is invalid afterwards.
 */
void inpg_policy_free(struct InpgPolicy *policy);

/**
 * One simultaneous NPG step, `log π' = (1 - ητ) log π + η r - LSE`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum InpgStatus inpg_npg_step(const struct InpgGame *game,
                              const struct InpgPolicy *policy,
                              double eta,
                              double tau,
                              struct InpgPolicy **out);

/**
 * One projected gradient step with direct parameterization.
 *
 * # Safety
 * As for [`inpg_npg_step`].
 */
enum InpgStatus inpg_pg_step(const struct InpgGame *game,
                             const struct InpgPolicy *policy,
                             double eta,
                             struct InpgPolicy **out);

/**
 * # Safety
 * Handles must be live; `out` writable.
 */
enum InpgStatus inpg_ne_gap(const struct InpgGame *game,
                            const struct InpgPolicy *policy,
                            double *out);

/**
 * Requires `tau > 0`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum InpgStatus inpg_qre_gap(const struct InpgGame *game,
                             const struct InpgPolicy *policy,
                             double tau,
                             double *out);

/**
 * `Φ(π) + τ Σ_i H(π_i)`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum InpgStatus inpg_regularized_potential(const struct InpgGame *game,
                                           const struct InpgPolicy *policy,
                                           double tau,
                                           double *out);

/**
 * Writes `r_agent^π` into `out`, which must hold `num_actions` doubles.
 *
 * # Safety
 * Handles must be live; `out` must hold `len` doubles.
 */
enum InpgStatus inpg_marginal_utility(const struct InpgGame *game,
                                      const struct InpgPolicy *policy,
                                      size_t agent,
                                      double *out,
                                      size_t len);

/**
 * `1 / (2 (min(sqrt N, 2 Φ_max) + τ))`.
 */
double inpg_default_learning_rate(size_t num_agents, double phi_max, double tau);

/**
 * Runs the configured dynamics from uniform policies.
 *
 * # Safety
 * `game` and `config` must be valid; `out` writable.
 */
enum InpgStatus inpg_run(const struct InpgGame *game,
                         const struct InpgRunConfig *config,
                         struct InpgRunLog **out);

/**
 * Number of logged rows, or 0 for a null handle.
 *
 * # Safety
 * `log` must be null or a live handle.
 */
size_t inpg_run_log_len(const struct InpgRunLog *log);

/**
 * # Safety
 * `log` must be live; `out` writable.
 */
enum InpgStatus inpg_run_log_record(const struct InpgRunLog *log,
                                    size_t index,
                                    struct InpgIterateRecord *out);

/**
 * Copy of the policy after the last iteration.
 *
 * # Safety
 * `log` must be live; `out` writable.
 */
enum InpgStatus inpg_run_log_final_policy(const struct InpgRunLog *log, struct InpgPolicy **out);

/**
 * Writes the log in the CLI's CSV format.
 *
 * # Safety
 * `log` must be live; `path` NUL-terminated.
 */
enum InpgStatus inpg_run_log_write_csv(const struct InpgRunLog *log, const char *path);

/**
 * # Safety
 * `log` must be null or a live handle; it is invalid afterwards.
 */
void inpg_run_log_free(struct InpgRunLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INPG_H */
