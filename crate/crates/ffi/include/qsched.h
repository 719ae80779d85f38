#ifndef QSCHED_H
#define QSCHED_H

#include <stddef.h>
#include <stdint.h>

typedef enum QschedStatus {
  QSCHED_STATUS_OK = 0,
  QSCHED_STATUS_NULL_POINTER = -1,
  QSCHED_STATUS_INVALID_CONFIG = -2,
  QSCHED_STATUS_INFEASIBLE = -3,
  QSCHED_STATUS_NUMERICAL = -4,
  QSCHED_STATUS_INVALID_ARGUMENT = -5,
  QSCHED_STATUS_PANIC = -99,
} QschedStatus;

// Validated system plus its LP, reusable across budgets.
typedef struct QschedConfig QschedConfig;

// Optimal threshold policy for one budget.
typedef struct QschedSolution QschedSolution;

// Long-run averages of a policy.
typedef struct QschedPoint {
  // Mean delay in slots.
  double delay;
  // Mean power per slot.
  double power;
  // Packets lost to overflow per slot.
  double loss;
  // Delay plus the loss penalty, as minimized by the solver.
  double objective;
} QschedPoint;

typedef struct QschedSimResult {
  double empirical_delay;
  double empirical_power;
  double loss_rate;
  double mean_queue;
  uint64_t slots_run;
} QschedSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Validates a system and builds its LP.
//
// `theta` has `n_theta` entries (batch sizes `0..n_theta`); `eta` and `power`
// have `n_states` entries each.
//
// # Safety
// Array pointers must be valid for their stated lengths and `out` for one
// write.
enum QschedStatus qsched_config_new(const double *theta,
                                    size_t n_theta,
                                    const double *eta,
                                    const double *power,
                                    size_t n_states,
                                    size_t capacity,
                                    struct QschedConfig **out);

// # Safety
// `cfg` must be null or a handle from [`qsched_config_new`] not yet freed.
void qsched_config_free(struct QschedConfig *cfg);

// Number of channel states.
//
// # Safety
// `cfg` must be a live handle and `out` valid for one write.
enum QschedStatus qsched_config_states(const struct QschedConfig *cfg, size_t *out);

// Mean packets arriving per slot.
//
// # Safety
// `cfg` must be a live handle and `out` valid for one write.
enum QschedStatus qsched_config_mean_rate(const struct QschedConfig *cfg, double *out);

// Smallest budget that can carry the offered load.
//
// # Safety
// `cfg` must be a live handle and `out` valid for one write.
enum QschedStatus qsched_config_min_power(const struct QschedConfig *cfg, double *out);

// Minimum-delay threshold policy under an average power budget.
//
// # Safety
// `cfg` must be a live handle and `out` valid for one write.
enum QschedStatus qsched_solve(const struct QschedConfig *cfg,
                               double budget,
                               struct QschedSolution **out);

// # Safety
// `sol` must be null or a handle from [`qsched_solve`] not yet freed.
void qsched_solution_free(struct QschedSolution *sol);

// Operating point of a solution.
//
// # Safety
// `sol` must be a live handle and `out` valid for one write.
enum QschedStatus qsched_solution_point(const struct QschedSolution *sol, struct QschedPoint *out);

// Copies the per-state thresholds and randomization probabilities. Both
// arrays need room for exactly `len` entries, the number of channel states.
//
// # Safety
// `sol` must be a live handle; `thresholds` and `frac` valid for `len` writes.
enum QschedStatus qsched_solution_thresholds(const struct QschedSolution *sol,
                                             size_t *thresholds,
                                             double *frac,
                                             size_t len);

// Exact long-run averages of a threshold policy.
//
// # Safety
// `cfg` must be a live handle; `thresholds` and `frac` valid for `len`
// reads; `out` valid for one write.
enum QschedStatus qsched_evaluate_thresholds(const struct QschedConfig *cfg,
                                             const size_t *thresholds,
                                             const double *frac,
                                             size_t len,
                                             struct QschedPoint *out);

// Simulates a threshold policy for `n_slots` slots.
//
// # Safety
// As [`qsched_evaluate_thresholds`].
enum QschedStatus qsched_simulate_thresholds(const struct QschedConfig *cfg,
                                             const size_t *thresholds,
                                             const double *frac,
                                             size_t len,
                                             uint64_t n_slots,
                                             uint64_t seed,
                                             struct QschedSimResult *out);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next `qsched_` call on the same thread.
const char *qsched_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qsched_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSCHED_H */
