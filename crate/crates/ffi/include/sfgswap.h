#ifndef SFGSWAP_H
#define SFGSWAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfgswapFormat {
  SFGSWAP_FORMAT_CSV = 0,
  SFGSWAP_FORMAT_JSON = 1,
  SFGSWAP_FORMAT_TABLE = 2,
} SfgswapFormat;

typedef enum SfgswapStatus {
  SFGSWAP_STATUS_OK = 0,
  SFGSWAP_STATUS_NULL_POINTER = 1,
  SFGSWAP_STATUS_INVALID_UTF8 = 2,
  SFGSWAP_STATUS_INVALID_PARAMETER = 3,
  SFGSWAP_STATUS_CONFIG_ERROR = 4,
  SFGSWAP_STATUS_INFEASIBLE = 5,
  SFGSWAP_STATUS_TRUNCATION = 6,
  SFGSWAP_STATUS_RUNTIME_ERROR = 7,
  SFGSWAP_STATUS_NOT_FOUND = 8,
  SFGSWAP_STATUS_PANIC = 9,
} SfgswapStatus;

/**
 * Opaque result of [`sfgswap_optimize_sixphoton`].
 */
typedef struct SfgswapOptimization SfgswapOptimization;

/**
 * Opaque scenario report.
 */
typedef struct SfgswapReport SfgswapReport;

/**
 * Waveguide parameters; units as in the field names.
 */
typedef struct SfgswapDevice {
  double eta_hat_pct_per_w_cm2;
  double delta_nu_hat_ghz_cm;
  double length_cm;
  double lambda_nm;
  double tbp;
} SfgswapDevice;

typedef struct SfgswapEfficiency {
  double eta_sfg;
  double delta_nu_hz;
  double pump_power_w;
  double photon_energy_j;
} SfgswapEfficiency;

typedef struct SfgswapLink {
  double distance_km;
  double atten_db_per_km;
  double rep_rate;
  double eta_c;
  double eta_d;
  double eta_sfg;
  double p_ab;
  double p_cd;
  bool include_alice_coupling;
} SfgswapLink;

/**
 * Figures of a simulated swap.
 */
typedef struct SfgswapSwapFigures {
  double probability;
  double probability_normalized;
  double fidelity;
  double truncation_weight;
} SfgswapSwapFigures;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sfgswap_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void sfgswap_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SfgswapStatus sfgswap_fiber_transmission(double distance_km,
                                              double atten_db_per_km,
                                              double *out);

double sfgswap_chsh_detection_threshold(void);

/**
 * Six-photon source fidelity and success probability. `clamped` is set
 * when either expression left `[0, 1]`.
 *
 * # Safety
 * Out-pointers must be valid for writes; `clamped` may be null.
 */
enum SfgswapStatus sfgswap_sixphoton_figures(double p,
                                             double theta,
                                             double eta,
                                             double *fidelity,
                                             double *success,
                                             bool *clamped);

/**
 * # Safety
 * Out-pointers must be valid for writes.
 */
enum SfgswapStatus sfgswap_sfg_swap_figures(double p,
                                            double eta_c,
                                            double eta,
                                            double eta_sfg,
                                            double *fidelity,
                                            double *success);

/**
 * # Safety
 * Out-pointers must be valid for writes.
 */
enum SfgswapStatus sfgswap_required_sfg_efficiency(double p_target,
                                                   double f_min,
                                                   double eta_c,
                                                   double eta_d,
                                                   double *p,
                                                   double *eta_sfg_min);

size_t sfgswap_device_catalog_len(void);

/**
 * Built-in device `index` (0 measured, 1 commercial, 2 research).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SfgswapStatus sfgswap_device_catalog(size_t index, struct SfgswapDevice *out);

/**
 * # Safety
 * `device` must point to a valid struct and `out` be valid for writes.
 */
enum SfgswapStatus sfgswap_sfg_efficiency(const struct SfgswapDevice *device,
                                          struct SfgswapEfficiency *out);

/**
 * Heralds per minute of the SFG link.
 *
 * # Safety
 * `link` must point to a valid struct and `out` be valid for writes.
 */
enum SfgswapStatus sfgswap_diqkd_heralds_per_min(const struct SfgswapLink *link, double *out);

/**
 * # Safety
 * `out` must be valid for writes. The handle is released with
 * [`sfgswap_optimization_free`].
 */
enum SfgswapStatus sfgswap_optimize_sixphoton(double eta,
                                              double f_min,
                                              struct SfgswapOptimization **out);

/**
 * Reads the optimum: pair probability, `cos²θ`, success probability and
 * fidelity. Any out-pointer may be null.
 *
 * # Safety
 * `handle` must be a live handle; non-null out-pointers must be valid.
 */
enum SfgswapStatus sfgswap_optimization_point(const struct SfgswapOptimization *handle,
                                              double *p,
                                              double *cos2_theta,
                                              double *success,
                                              double *fidelity);

/**
 * True when the optimum lies on the edge of the search domain.
 *
 * # Safety
 * `handle` must be a live handle or null.
 */
bool sfgswap_optimization_boundary_active(const struct SfgswapOptimization *handle);

/**
 * # Safety
 * `handle` must come from [`sfgswap_optimize_sixphoton`] and not have been
 * freed already.
 */
void sfgswap_optimization_free(struct SfgswapOptimization *handle);

/**
 * Fock simulation of swapping with a linear-optics Bell measurement and
 * threshold detectors of efficiency `eta_d`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SfgswapStatus sfgswap_simulate_linear_swap(double p_ab,
                                                double p_cd,
                                                double eta_d,
                                                uint8_t max_pairs,
                                                struct SfgswapSwapFigures *out);

/**
 * Fock simulation of swapping with an SFG Bell measurement of coupling
 * `g` (`η_SFG = g²`).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SfgswapStatus sfgswap_simulate_sfg_swap(double p_ab,
                                             double p_cd,
                                             double g,
                                             double eta_c,
                                             double eta_d,
                                             uint8_t max_pairs,
                                             struct SfgswapSwapFigures *out);

/**
 * Parses a `key=value` config and runs its scenario.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `out` must be valid for
 * writes. The handle is released with [`sfgswap_report_free`].
 */
enum SfgswapStatus sfgswap_run_config(const char *config, struct SfgswapReport **out);

/**
 * # Safety
 * `report` must be a live handle or null.
 */
size_t sfgswap_report_rows(const struct SfgswapReport *report);

/**
 * Numeric cell at `row` of column `column`.
 *
 * # Safety
 * `report` must be a live handle, `column` a NUL-terminated string and
 * `out` valid for writes.
 */
enum SfgswapStatus sfgswap_report_value(const struct SfgswapReport *report,
                                        size_t row,
                                        const char *column,
                                        double *out);

/**
 * Renders the report; release the string with [`sfgswap_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writes.
 */
enum SfgswapStatus sfgswap_report_render(const struct SfgswapReport *report,
                                         enum SfgswapFormat format,
                                         char **out);

/**
 * # Safety
 * `report` must come from [`sfgswap_run_config`] and not have been freed
 * already.
 */
void sfgswap_report_free(struct SfgswapReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFGSWAP_H */
