#ifndef ZAKBENCH_H
#define ZAKBENCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the numeric values match the CLI exit codes.
typedef enum ZbStatus {
  ZB_STATUS_OK = 0,
  ZB_STATUS_FAILURE = 1,
  ZB_STATUS_INVALID_ARGUMENT = 2,
  ZB_STATUS_GAPLESS = 3,
  ZB_STATUS_UNWRAP_JUMP = 4,
  ZB_STATUS_ROTATING_WAVE = 5,
} ZbStatus;

typedef enum ZbSchedule {
  // Mirror half-zone paths, `Δφ(T) = πW`.
  ZB_SCHEDULE_HALF = 0,
  // Mirror full-zone paths, `Δφ(T) = 2πW`.
  ZB_SCHEDULE_FULL = 1,
} ZbSchedule;

// Coupling parameters `(w, v, J)`.
typedef struct ZbModel ZbModel;

// Result of one interferometric pair run.
typedef struct ZbPhaseRun ZbPhaseRun;

// Resonator settings for the lab-frame comparison. Units are Hz, s and rad/s.
typedef struct ZbCavityConfig {
  double f0_hz;
  double gamma;
  double g0;
  double sample_rate;
  double total_time;
  uint32_t demod_cycles;
  uint32_t substeps;
} ZbCavityConfig;

typedef struct ZbLabResult {
  double delta_phi_lab;
  double delta_phi_rot;
  double abs_error;
  size_t samples;
} ZbLabResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next `zb_*` call on the same thread.
const char *zb_last_error(void);

const char *zb_version(void);

// # Safety
// `out` must be valid for a pointer write.
enum ZbStatus zb_model_new(double w, double v, double j, struct ZbModel **out);

// # Safety
// `model` must come from [`zb_model_new`] and not be used afterwards. Null is ignored.
void zb_model_free(struct ZbModel *model);

// Winding number of `q(k)` sampled at `n` points.
//
// # Safety
// `model` must be a live handle and `out` valid for a write.
enum ZbStatus zb_winding_number(const struct ZbModel *model, size_t n, int64_t *out);

// Wilson-loop Zak phase of the upper band, in `[0, 2π)`.
//
// # Safety
// `model` must be a live handle and `out` valid for a write.
enum ZbStatus zb_zak_wilson(const struct ZbModel *model, size_t n, double *out);

// `arg q` continued from `k = 0` to `k = target` over `n` intervals.
//
// # Safety
// `model` must be a live handle and `out` valid for a write.
enum ZbStatus zb_theta_unwrapped(const struct ZbModel *model, double target, size_t n, double *out);

// Evolves the mirror pair over `total_time` (in units of 1/g0) with `steps` steps.
//
// # Safety
// `model` must be a live handle and `out` valid for a pointer write.
enum ZbStatus zb_phase_run_new(const struct ZbModel *model,
                               double total_time,
                               size_t steps,
                               enum ZbSchedule schedule,
                               struct ZbPhaseRun **out);

// # Safety
// `run` must come from [`zb_phase_run_new`] and not be used afterwards. Null is ignored.
void zb_phase_run_free(struct ZbPhaseRun *run);

// Number of samples, `steps + 1`; 0 for a null handle.
//
// # Safety
// `run` must be a live handle or null.
size_t zb_phase_run_len(const struct ZbPhaseRun *run);

// # Safety
// `run` must be a live handle and `out` valid for a write.
enum ZbStatus zb_phase_run_final(const struct ZbPhaseRun *run, double *out);

// Smallest instantaneous-eigenstate fidelity over both paths.
//
// # Safety
// `run` must be a live handle and `out` valid for a write.
enum ZbStatus zb_phase_run_min_fidelity(const struct ZbPhaseRun *run, double *out);

// Copies the sample times into `buf`, which must hold `zb_phase_run_len` values.
//
// # Safety
// `run` must be a live handle and `buf` valid for `len` writes.
enum ZbStatus zb_phase_run_times(const struct ZbPhaseRun *run, double *buf, size_t len);

// Copies the unwrapped `Δφ(t)` into `buf`, which must hold `zb_phase_run_len` values.
//
// # Safety
// `run` must be a live handle and `buf` valid for `len` writes.
enum ZbStatus zb_phase_run_delta_phi(const struct ZbPhaseRun *run, double *buf, size_t len);

struct ZbCavityConfig zb_cavity_config_default(void);

// Runs the resonator emulation and compares its phase with the rotating frame.
//
// # Safety
// `model` must be a live handle, `config` readable and `out` valid for a write.
enum ZbStatus zb_lab_compare(const struct ZbModel *model,
                             const struct ZbCavityConfig *config,
                             struct ZbLabResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZAKBENCH_H */
