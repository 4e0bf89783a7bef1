#ifndef TAXISLAB_H
#define TAXISLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TaxislabStatus {
  TAXISLAB_STATUS_OK = 0,
  TAXISLAB_STATUS_NULL_POINTER = 1,
  TAXISLAB_STATUS_INVALID_UTF8 = 2,
  TAXISLAB_STATUS_INVALID_ARGUMENT = 3,
  TAXISLAB_STATUS_CONFIG = 4,
  TAXISLAB_STATUS_NUMERICAL = 5,
  TAXISLAB_STATUS_IO = 6,
  TAXISLAB_STATUS_BUFFER_TOO_SMALL = 7,
  TAXISLAB_STATUS_UNKNOWN_FIELD = 8,
  /**
   * The run stopped because `‖u‖∞` crossed the blow-up threshold or
   * jumped by more than the allowed factor in one step.
   */
  TAXISLAB_STATUS_BLOW_UP = 9,
  /**
   * Hypothesis check ran but at least one condition failed.
   */
  TAXISLAB_STATUS_CHECK_FAILED = 10,
  TAXISLAB_STATUS_PANIC = 99,
} TaxislabStatus;

/**
 * Opaque simulation handle.
 */
typedef struct TaxislabSimulation TaxislabSimulation;

/**
 * Diagnostics of the current state, mirroring one timeseries row.
 */
typedef struct TaxislabDiagnostics {
  double t;
  double mass_u;
  double mass_w;
  double mass_h;
  double max_u;
  double max_h;
  double max_v;
  double max_w;
  double min_v;
  double entropy_u;
  double dirichlet_h;
  double dirichlet_v;
  double dirichlet_w;
  double l2_w;
  double energy;
  double dissipation;
  double dt;
  double clipped_mass;
  uint64_t lin_iterations;
} TaxislabDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulation at `t = 0` from a scenario JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TaxislabStatus taxislab_simulation_from_json(const char *json,
                                                  struct TaxislabSimulation **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`taxislab_simulation_from_json`] and not be used afterwards.
 */
void taxislab_simulation_free(struct TaxislabSimulation *sim);

/**
 * Advances one step toward the configured horizon; `dt_out` may be null.
 * Does nothing once the horizon is reached.
 *
 * # Safety
 * `sim` must be a live handle; `dt_out` null or valid.
 */
enum TaxislabStatus taxislab_simulation_step(struct TaxislabSimulation *sim, double *dt_out);

/**
 * Steps until `t` (clamped to the horizon), landing on it exactly.
 *
 * # Safety
 * `sim` must be a live handle; `steps_out` null or valid.
 */
enum TaxislabStatus taxislab_simulation_run_until(struct TaxislabSimulation *sim,
                                                  double t,
                                                  uint64_t *steps_out);

/**
 * Current simulation time; NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double taxislab_simulation_time(const struct TaxislabSimulation *sim);

/**
 * # Safety
 * `sim` must be a live handle; `nx`, `ny` valid pointers.
 */
enum TaxislabStatus taxislab_simulation_grid_size(const struct TaxislabSimulation *sim,
                                                  size_t *nx,
                                                  size_t *ny);

/**
 * Copies field `name` (`"u"`, `"h"`, `"v"` or `"w"`) in row-major order
 * (`index = i + j·nx`). `len` must be at least `nx·ny`.
 *
 * # Safety
 * `sim` must be a live handle, `name` NUL-terminated, `buf` valid for `len` doubles.
 */
enum TaxislabStatus taxislab_simulation_copy_field(const struct TaxislabSimulation *sim,
                                                   const char *name,
                                                   double *buf,
                                                   size_t len);

/**
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum TaxislabStatus taxislab_simulation_diagnostics(const struct TaxislabSimulation *sim,
                                                    struct TaxislabDiagnostics *out);

/**
 * Checks the scenario's kinetics against its `hypothesis_budget` and
 * writes the report table to `*report_out` (free with
 * [`taxislab_string_free`]). Returns `CheckFailed` when any condition fails.
 *
 * # Safety
 * `json` must be NUL-terminated and `report_out` valid.
 */
enum TaxislabStatus taxislab_check_hypotheses_json(const char *json, char **report_out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void taxislab_string_free(char *s);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * including the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t taxislab_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAXISLAB_H */
