#ifndef UAVSEC_H
#define UAVSEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes. `Ok` is zero.
 */
typedef enum UavsecStatus {
  UAVSEC_STATUS_OK = 0,
  UAVSEC_STATUS_INVALID_INPUT = 1,
  UAVSEC_STATUS_DIMENSION_MISMATCH = 2,
  UAVSEC_STATUS_CONFIG = 3,
  UAVSEC_STATUS_UNKNOWN_KEY = 4,
  UAVSEC_STATUS_PARSE = 5,
  UAVSEC_STATUS_IO = 6,
  UAVSEC_STATUS_RANK_DEFICIENT = 7,
  UAVSEC_STATUS_DEGENERATE_LINEARIZATION = 8,
  UAVSEC_STATUS_SINGULAR = 9,
  UAVSEC_STATUS_INFEASIBLE = 10,
  UAVSEC_STATUS_UNREACHABLE = 11,
  UAVSEC_STATUS_SLOT_INFEASIBLE = 12,
  UAVSEC_STATUS_NON_CONVERGENCE = 13,
  UAVSEC_STATUS_NULL_POINTER = 14,
  UAVSEC_STATUS_BUFFER_TOO_SMALL = 15,
  UAVSEC_STATUS_PANIC = 16,
} UavsecStatus;

/*
 Scenario configuration handle.
 */
typedef struct UavsecConfig UavsecConfig;

/*
 Output of a joint trajectory and precoder optimization.
 */
typedef struct UavsecOptimization UavsecOptimization;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length, or 0 when no error
 has been recorded.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t uavsec_last_error_message(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *uavsec_version(void);

/*
 Creates a configuration holding the reference scenario.

 # Safety
 `out` must be a valid pointer.
 */
enum UavsecStatus uavsec_config_reference(struct UavsecConfig **out);

/*
 Parses and validates a TOML scenario.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum UavsecStatus uavsec_config_from_toml(const char *text, struct UavsecConfig **out);

/*
 Applies one `section.key=value` override. The configuration is left
 unchanged if the result does not validate.

 # Safety
 `config` must come from this library; `assignment` must be NUL-terminated.
 */
enum UavsecStatus uavsec_config_set(struct UavsecConfig *config, const char *assignment);

/*
 # Safety
 `config` must be null or come from this library, and not be used afterwards.
 */
void uavsec_config_free(struct UavsecConfig *config);

/*
 Writes the K Fekete points on [-1, 1] into `out_beta` (length `k`).

 # Safety
 `out_beta` must point to `k` writable doubles.
 */
enum UavsecStatus uavsec_fekete_points(size_t k, double *out_beta);

/*
 Spectral cap c such that WWᴴ ⪯ cI keeps every one of `q` Rayleigh
 eavesdroppers below SNR `xi` with probability at least `kappa`.

 # Safety
 `out` must be a valid pointer.
 */
enum UavsecStatus uavsec_spectral_cap(double xi,
                                      double kappa,
                                      size_t q,
                                      double sigma_e2,
                                      size_t n,
                                      double *out);

/*
 Capacity Σ log₂(1 + γλ_k/N) of the normalized channel between an
 M-element uniform receiver and the transmit topology `eta` (length `n`).

 # Safety
 `eta` must point to `n` doubles and `out` be valid.
 */
enum UavsecStatus uavsec_topology_capacity(size_t m,
                                           const double *eta,
                                           size_t n,
                                           size_t k,
                                           double nu,
                                           double phi,
                                           double gamma,
                                           double *out);

/*
 Minimum-power precoder for a K×N channel (`h_re`, `h_im` row-major).
 Writes the N×K precoder row-major into `w_re`, `w_im` and its power to
 `out_power`. Pass `INFINITY` for `spectral_cap` or `p_max` to disable.

 # Safety
 `h_re`/`h_im` must hold K·N doubles, `w_re`/`w_im` N·K writable doubles.
 */
enum UavsecStatus uavsec_solve_precoding(const double *h_re,
                                         const double *h_im,
                                         size_t k,
                                         size_t n,
                                         double gamma,
                                         double sigma2,
                                         double spectral_cap,
                                         double p_max,
                                         double *w_re,
                                         double *w_im,
                                         double *out_power);

/*
 Runs the joint trajectory and precoder optimization.

 # Safety
 `config` must come from this library and `out` be valid.
 */
enum UavsecStatus uavsec_optimize(const struct UavsecConfig *config,
                                  struct UavsecOptimization **out);

/*
 Number of transmission slots I (the trajectory has I + 1 centers).

 # Safety
 `result` must come from [`uavsec_optimize`].
 */
size_t uavsec_optimization_slots(const struct UavsecOptimization *result);

/*
 Total transmit power Γ in watts.

 # Safety
 `result` must come from [`uavsec_optimize`] and `out` be valid.
 */
enum UavsecStatus uavsec_optimization_total_power(const struct UavsecOptimization *result,
                                                  double *out);

/*
 Writes the I + 1 centers as interleaved x, y pairs into `xy`, which must
 hold `len` doubles with `len >= 2 (I + 1)`.

 # Safety
 `result` must come from [`uavsec_optimize`]; `xy` must hold `len` doubles.
 */
enum UavsecStatus uavsec_optimization_centers(const struct UavsecOptimization *result,
                                              double *xy,
                                              size_t len);

/*
 # Safety
 `result` must be null or come from [`uavsec_optimize`], and not be used afterwards.
 */
void uavsec_optimization_free(struct UavsecOptimization *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UAVSEC_H */
