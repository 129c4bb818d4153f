#ifndef MIMOCAP_H
#define MIMOCAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MimocapStatus {
  MIMOCAP_STATUS_OK = 0,
  MIMOCAP_STATUS_NULL_POINTER = 1,
  MIMOCAP_STATUS_DOMAIN = 2,
  MIMOCAP_STATUS_NO_CONVERGENCE = 3,
  MIMOCAP_STATUS_INTERNAL = 4,
  MIMOCAP_STATUS_PARSE = 5,
  MIMOCAP_STATUS_IO = 6,
  MIMOCAP_STATUS_PANIC = 7,
} MimocapStatus;

/**
 * Eigenvalue groups of an interference-plus-noise covariance.
 */
typedef struct MimocapCovariance MimocapCovariance;

/**
 * Desired link plus interferers.
 */
typedef struct MimocapScenario MimocapScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mimocap_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mimocap_version(void);

/**
 * Builds a covariance from `count` (eigenvalue, multiplicity) pairs.
 *
 * # Safety
 * `eigenvalues` and `multiplicities` must point to `count` readable elements
 * and `out` must be writable.
 */
enum MimocapStatus mimocap_covariance_new(const double *eigenvalues,
                                          const size_t *multiplicities,
                                          size_t count,
                                          struct MimocapCovariance **out);

/**
 * # Safety
 * `cov` must be NULL or a handle from [`mimocap_covariance_new`] not yet freed.
 */
void mimocap_covariance_free(struct MimocapCovariance *cov);

/**
 * Builds a scenario; user 0 is the desired link.
 *
 * # Safety
 * `nt` and `power` must point to `users` readable elements and `out` must be
 * writable.
 */
enum MimocapStatus mimocap_scenario_new(size_t nr,
                                        const size_t *nt,
                                        const double *power,
                                        size_t users,
                                        double sigma2,
                                        struct MimocapScenario **out);

/**
 * Parses the flat key-value scenario text used by the command-line tool.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` must be writable.
 */
enum MimocapStatus mimocap_scenario_parse(const char *text, struct MimocapScenario **out);

/**
 * # Safety
 * `s` must be NULL or a live scenario handle.
 */
void mimocap_scenario_free(struct MimocapScenario *s);

/**
 * Ergodic capacity `E ln det(I + H Φ H†)` in bits/s/Hz with `p` receive
 * antennas.
 *
 * # Safety
 * `cov` must be a live handle and `bits` writable.
 */
enum MimocapStatus mimocap_capacity_su(const struct MimocapCovariance *cov, size_t p, double *bits);

/**
 * Mutual information of the desired link under interference, bits/s/Hz.
 *
 * # Safety
 * `s` must be a live handle and `bits` writable.
 */
enum MimocapStatus mimocap_capacity_mu(const struct MimocapScenario *s, double *bits);

/**
 * Capacity with the interference treated as extra white noise, bits/s/Hz.
 *
 * # Safety
 * `s` must be a live handle and `bits` writable.
 */
enum MimocapStatus mimocap_capacity_gaussian(const struct MimocapScenario *s, double *bits);

/**
 * Half-duplex relay upper bound (half the single-hop capacity), bits/s/Hz.
 *
 * # Safety
 * `cov` must be a live handle and `bits` writable.
 */
enum MimocapStatus mimocap_relay_upper_bound(const struct MimocapCovariance *cov,
                                             size_t p,
                                             double *bits);

/**
 * Joint density of the ordered nonzero eigenvalues of `H Φ H†` at `x`
 * (`len` must equal `min(dim Φ, p)`).
 *
 * # Safety
 * `cov` must be a live handle, `x` must point to `len` readable values and
 * `density` must be writable.
 */
enum MimocapStatus mimocap_joint_pdf(const struct MimocapCovariance *cov,
                                     size_t p,
                                     const double *x,
                                     size_t len,
                                     double *density);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIMOCAP_H */
