#ifndef ASQG_H
#define ASQG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by all functions.
 */
typedef enum AsqgStatus {
  ASQG_STATUS_OK = 0,
  ASQG_STATUS_NULL_POINTER = 1,
  ASQG_STATUS_INVALID_ALPHA = 2,
  ASQG_STATUS_INVALID_ARGUMENT = 3,
  ASQG_STATUS_DOMAIN = 4,
  ASQG_STATUS_INVARIANT_VIOLATION = 5,
  ASQG_STATUS_BLOW_UP = 6,
  ASQG_STATUS_INTERNAL = 7,
} AsqgStatus;

/**
 * Simulation handle: configuration, current state and time.
 */
typedef struct AsqgSimulation AsqgSimulation;

/**
 * Frequency table handle.
 */
typedef struct AsqgTable AsqgTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated, truncated to `len`).
 *
 * Returns the full message length without the terminator, or 0 when there is none.
 *
 * # Safety
 * `buf` must be null or valid for `len` writable bytes.
 */
size_t asqg_last_error(char *buf, size_t len);

/**
 * `omega(j)` for the given `alpha`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum AsqgStatus asqg_omega(double alpha, int64_t j, double *out);

/**
 * Builds and certifies the frequency table for `0 <= j <= j_max`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one pointer.
 */
enum AsqgStatus asqg_table_new(double alpha, size_t j_max, struct AsqgTable **out);

/**
 * Releases a table; null is ignored.
 *
 * # Safety
 * `table` must come from [`asqg_table_new`] and not be used afterwards.
 */
void asqg_table_free(struct AsqgTable *table);

/**
 * `omega(j)` from the table, `|j| <= j_max`.
 *
 * # Safety
 * `table` must be a live handle and `out` writable for one `double`.
 */
enum AsqgStatus asqg_table_omega(const struct AsqgTable *table, int64_t j, double *out);

/**
 * Minimum three-wave gap over `|n|, |j| <= range`; the realizing triple goes to `n`, `j`, `k`.
 *
 * # Safety
 * `table` must be a live handle; each out pointer must be null or writable.
 */
enum AsqgStatus asqg_table_min_gap(const struct AsqgTable *table,
                                   size_t range,
                                   double *gap,
                                   int64_t *n,
                                   int64_t *j,
                                   int64_t *k);

/**
 * `grad E(f)` on `n` grid samples with `m` quadrature nodes.
 *
 * # Safety
 * `f` must hold `n` readable values and `out` `n` writable values.
 */
enum AsqgStatus asqg_grad_e(double alpha, size_t n, size_t m, const double *f, double *out);

/**
 * `d/dx grad E(f)` on `n` grid samples with `m` quadrature nodes.
 *
 * # Safety
 * `f` must hold `n` readable values and `out` `n` writable values.
 */
enum AsqgStatus asqg_rhs_f(double alpha, size_t n, size_t m, const double *f, double *out);

/**
 * Creates a simulation from `n` samples of `f(0)`.
 *
 * `m = 0` selects `4 n` quadrature nodes and `dt <= 0` the stability bound.
 *
 * # Safety
 * `f0` must hold `n` readable values; `out` must be writable for one pointer.
 */
enum AsqgStatus asqg_sim_new(double alpha,
                             size_t n,
                             size_t m,
                             double dt,
                             const double *f0,
                             struct AsqgSimulation **out);

/**
 * Releases a simulation; null is ignored.
 *
 * # Safety
 * `sim` must come from [`asqg_sim_new`] and not be used afterwards.
 */
void asqg_sim_free(struct AsqgSimulation *sim);

/**
 * Advances by `steps` time steps. On failure the state stays at the last good step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum AsqgStatus asqg_sim_step(struct AsqgSimulation *sim, uint64_t steps);

/**
 * Current time and time step.
 *
 * # Safety
 * `sim` must be a live handle; `time` and `dt` must be null or writable.
 */
enum AsqgStatus asqg_sim_time(const struct AsqgSimulation *sim, double *time, double *dt);

/**
 * Copies the `n` grid samples of the current `f` into `out`.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable for `n` values.
 */
enum AsqgStatus asqg_sim_state(const struct AsqgSimulation *sim, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASQG_H */
