#ifndef CELLFREE_IRS_H
#define CELLFREE_IRS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfiStatus {
  CFI_STATUS_OK = 0,
  CFI_STATUS_NULL_POINTER = 1,
  // Bad dimensions or values outside an operation's domain.
  CFI_STATUS_INVALID_ARGUMENT = 2,
  // Malformed JSON or an inconsistent configuration.
  CFI_STATUS_CONFIG = 3,
  CFI_STATUS_NUMERICAL = 4,
  // Output buffer shorter than the result.
  CFI_STATUS_BUFFER_TOO_SMALL = 5,
  CFI_STATUS_PANIC = 6,
} CfiStatus;

// One channel realization together with the seed it was drawn from.
typedef struct CfiChannels CfiChannels;

// Validated system configuration.
typedef struct CfiConfig CfiConfig;

// Result of a joint optimization.
typedef struct CfiOutcome CfiOutcome;

// Constant-modulus QP `max −θᴴZθ + 2Re(θᴴω)`.
typedef struct CfiQp CfiQp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next library call on the same thread.
const char *cfi_last_error(void);

// Library version as a static nul-terminated string.
const char *cfi_version(void);

// Parses a JSON configuration; omitted fields take their defaults, so `"{}"`
// is the reference scenario.
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable pointer.
enum CfiStatus cfi_config_from_json(const char *json, struct CfiConfig **out);

// # Safety
// `cfg` must be null or a handle from [`cfi_config_from_json`] not yet freed.
void cfi_config_free(struct CfiConfig *cfg);

// Draws the channel realization `seed` of the stream `master` for the
// geometry template given as JSON.
//
// # Safety
// `cfg` must be a live handle, `geometry_json` a nul-terminated string and
// `out` a writable pointer.
enum CfiStatus cfi_channels_sample(const struct CfiConfig *cfg,
                                   const char *geometry_json,
                                   uint64_t master,
                                   uint64_t seed,
                                   struct CfiChannels **out);

// # Safety
// `ch` must be null or a live channel handle.
void cfi_channels_free(struct CfiChannels *ch);

// Runs the alternating optimizer with the scheme given as JSON, for
// example `{"solver": "ASO"}` or `{"solver": "DISCRETE", "levels": 4}`.
// Randomness is derived from the realization's seed, so results match the
// experiment runner.
//
// # Safety
// `cfg` and `ch` must be live handles, `scheme_json` a nul-terminated
// string and `out` a writable pointer.
enum CfiStatus cfi_joint_optimize(const struct CfiConfig *cfg,
                                  const struct CfiChannels *ch,
                                  const char *scheme_json,
                                  struct CfiOutcome **out);

// Final sum-rate in nats on the true channels; NaN for a null handle.
//
// # Safety
// `res` must be null or a live outcome handle.
double cfi_outcome_sum_rate(const struct CfiOutcome *res);

// Outer iterations run; 0 for a null handle.
//
// # Safety
// `res` must be null or a live outcome handle.
size_t cfi_outcome_iterations(const struct CfiOutcome *res);

// # Safety
// `res` must be null or a live outcome handle.
bool cfi_outcome_converged(const struct CfiOutcome *res);

// Copies the per-iteration sum-rate trace (nats). `len` receives the trace
// length; pass `buf = NULL` to query it.
//
// # Safety
// `res` must be a live handle, `len` writable, and `buf` null or valid for
// `cap` doubles.
enum CfiStatus cfi_outcome_rates(const struct CfiOutcome *res,
                                 double *buf,
                                 size_t cap,
                                 size_t *len);

// Copies the reflection coefficients into `re`/`im`. `len` receives the
// element count; pass null buffers to query it.
//
// # Safety
// `res` must be a live handle, `len` writable, and `re`/`im` null or valid
// for `cap` doubles each.
enum CfiStatus cfi_outcome_theta(const struct CfiOutcome *res,
                                 double *re,
                                 double *im,
                                 size_t cap,
                                 size_t *len);

// # Safety
// `res` must be null or a live outcome handle.
void cfi_outcome_free(struct CfiOutcome *res);

// Builds a QP from a Hermitian `n × n` matrix `Z` (row-major) and a vector
// `ω` of length `n`.
//
// # Safety
// `z_re`/`z_im` must be valid for `n·n` doubles, `w_re`/`w_im` for `n`,
// and `out` writable.
enum CfiStatus cfi_qp_new(size_t n,
                          const double *z_re,
                          const double *z_im,
                          const double *w_re,
                          const double *w_im,
                          struct CfiQp **out);

// # Safety
// `qp` must be null or a live QP handle.
void cfi_qp_free(struct CfiQp *qp);

// Evaluates the QP objective at `θ`, which must satisfy `|θ_i| = α`.
//
// # Safety
// `qp` must be a live handle, `theta_re`/`theta_im` valid for `n` doubles
// and `value` writable.
enum CfiStatus cfi_qp_eval(const struct CfiQp *qp,
                           double alpha,
                           const double *theta_re,
                           const double *theta_im,
                           double *value);

// Element-wise closed-form ascent from `θ` (updated in place) until the
// objective changes by at most `eps` between sweeps or `max_sweeps` run.
//
// # Safety
// `qp` must be a live handle, `theta_re`/`theta_im` valid for `n` doubles
// each, and `value` null or writable.
enum CfiStatus cfi_qp_solve_aso(const struct CfiQp *qp,
                                double alpha,
                                double eps,
                                size_t max_sweeps,
                                double *theta_re,
                                double *theta_im,
                                double *value);

// Coordinate sweeps over the grid `{2πm/levels}` from `θ` (updated in
// place), which must lie on that grid.
//
// # Safety
// As [`cfi_qp_solve_aso`].
enum CfiStatus cfi_qp_solve_discrete(const struct CfiQp *qp,
                                     double alpha,
                                     uint32_t levels,
                                     size_t max_sweeps,
                                     double *theta_re,
                                     double *theta_im,
                                     double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLFREE_IRS_H */
