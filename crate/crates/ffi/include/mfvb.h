#ifndef MFVB_H
#define MFVB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfvbStatus {
  MFVB_STATUS_OK = 0,
  MFVB_STATUS_NULL_POINTER = 1,
  MFVB_STATUS_INVALID_ARGUMENT = 2,
  MFVB_STATUS_DIMENSION_MISMATCH = 3,
  MFVB_STATUS_INFINITE_DIVERGENCE = 4,
  MFVB_STATUS_NON_FINITE = 5,
  MFVB_STATUS_SIZE_LIMIT = 6,
  MFVB_STATUS_IO = 7,
  MFVB_STATUS_PANIC = 8,
} MfvbStatus;

// Opaque result of a Gaussian-mixture variational fit.
typedef struct MfvbGmmFit MfvbGmmFit;

// Opaque finite mixing measure.
typedef struct MfvbMeasure MfvbMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library from the same thread.
const char *mfvb_last_error(void);

// Build a measure from `k` weights and `k * d` row-major atom coordinates.
//
// # Safety
// `weights` must hold `k` values, `atoms` `k * d` values, `out` be writable.
enum MfvbStatus mfvb_measure_new(const double *weights,
                                 const double *atoms,
                                 size_t k,
                                 size_t d,
                                 struct MfvbMeasure **out_measure);

// # Safety
// `measure` must come from this library and not be freed twice; NULL is ignored.
void mfvb_measure_free(struct MfvbMeasure *measure);

// Number of atoms, or 0 for NULL.
//
// # Safety
// `measure` must be NULL or a live handle.
size_t mfvb_measure_k(const struct MfvbMeasure *measure);

// Atom dimension, or 0 for NULL.
//
// # Safety
// `measure` must be NULL or a live handle.
size_t mfvb_measure_dim(const struct MfvbMeasure *measure);

// Copy weights into `weights` (length `k`) and atoms into `atoms` (length `k * d`, row-major).
//
// # Safety
// Buffers must be writable for the stated lengths.
enum MfvbStatus mfvb_measure_copy(const struct MfvbMeasure *measure,
                                  double *weights,
                                  size_t weights_len,
                                  double *atoms,
                                  size_t atoms_len);

// `W_r` between two measures with Euclidean ground cost, `r >= 1`.
//
// # Safety
// Handles must be live; `out` writable.
enum MfvbStatus mfvb_wasserstein(const struct MfvbMeasure *p,
                                 const struct MfvbMeasure *q,
                                 double r,
                                 double *out_value);

// Monte Carlo squared Hellinger distance (range `[0, 2]`) between the
// unit-variance Gaussian location mixtures of two measures.
//
// # Safety
// Handles must be live; outputs writable.
enum MfvbStatus mfvb_hellinger_sq_mixture(const struct MfvbMeasure *p,
                                          const struct MfvbMeasure *q,
                                          size_t samples,
                                          uint64_t seed,
                                          double *out_estimate,
                                          double *out_std_error);

// `KL(p || q)` for categorical distributions of length `len`.
//
// # Safety
// `p` and `q` must hold `len` values; `out` writable.
enum MfvbStatus mfvb_kl_categorical(const double *p,
                                    const double *q,
                                    size_t len,
                                    double *out_value);

// Squared Hellinger distance (no 1/2 factor) for categorical distributions.
//
// # Safety
// `p` and `q` must hold `len` values; `out` writable.
enum MfvbStatus mfvb_hellinger_sq_categorical(const double *p,
                                              const double *q,
                                              size_t len,
                                              double *out_value);

// # Safety
// `out` must be writable.
enum MfvbStatus mfvb_digamma(double x, double *out_value);

// Fit a `k`-component mixture to `n` observations of dimension `d`
// (row-major) under a `Dir(alpha)` x `N(0, prior_variance I)` prior.
//
// # Safety
// `observations` must hold `n * d` values; `out_fit` writable.
enum MfvbStatus mfvb_gmm_fit(const double *observations,
                             size_t n,
                             size_t d,
                             size_t k,
                             double alpha,
                             double prior_variance,
                             size_t restarts,
                             uint64_t seed,
                             struct MfvbGmmFit **out_fit);

// # Safety
// `fit` must come from this library and not be freed twice; NULL is ignored.
void mfvb_gmm_fit_free(struct MfvbGmmFit *fit);

// Final ELBO, iteration count and convergence flag of a fit.
//
// # Safety
// `fit` must be live; outputs writable.
enum MfvbStatus mfvb_gmm_fit_summary(const struct MfvbGmmFit *fit,
                                     double *out_elbo,
                                     size_t *out_iterations,
                                     bool *out_converged);

// Variational mean of the mixing measure as a new handle.
//
// # Safety
// `fit` must be live; `out_measure` writable.
enum MfvbStatus mfvb_gmm_fit_point_estimate(const struct MfvbGmmFit *fit,
                                            struct MfvbMeasure **out_measure);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFVB_H */
