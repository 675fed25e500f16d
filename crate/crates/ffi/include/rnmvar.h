#ifndef RNMVAR_H
#define RNMVAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RnmStatus {
  RNM_STATUS_OK = 0,
  RNM_STATUS_NULL_POINTER = 1,
  RNM_STATUS_INVALID_ARGUMENT = 2,
  RNM_STATUS_UNSUPPORTED = 3,
  RNM_STATUS_NUMERICAL = 4,
  RNM_STATUS_PANIC = 5,
} RnmStatus;

/**
 * Opaque kernel handle: an orthonormal basis of size `n` for one potential.
 */
typedef struct RnmKernel RnmKernel;

/**
 * Opaque potential handle.
 */
typedef struct RnmPotential RnmPotential;

typedef struct RnmComplex {
  double re;
  double im;
} RnmComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rnm_version(void);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *rnm_last_error_message(void);

/**
 * `Q(z) = |z|^2`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum RnmStatus rnm_potential_ginibre(struct RnmPotential **out);

/**
 * Elliptic Ginibre potential with non-Hermiticity `|tau| < 1`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum RnmStatus rnm_potential_elliptic_ginibre(double tau, struct RnmPotential **out);

/**
 * `Q(z) = c |z|^(2p)`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum RnmStatus rnm_potential_radial_power(double p, double c, struct RnmPotential **out);

/**
 * # Safety
 * `p` must be null or a handle from an `rnm_potential_*` constructor that
 * has not been freed.
 */
void rnm_potential_free(struct RnmPotential *p);

/**
 * `Q(z)`.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_potential_eval(const struct RnmPotential *p, struct RnmComplex z, double *out);

/**
 * Quarter Laplacian `(Q_xx + Q_yy) / 4`.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_potential_laplacian(const struct RnmPotential *p,
                                       struct RnmComplex z,
                                       double *out);

/**
 * Builds the correlation kernel `K_n` for a potential.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for writing one pointer.
 */
enum RnmStatus rnm_kernel_new(const struct RnmPotential *p, size_t n, struct RnmKernel **out);

/**
 * # Safety
 * `k` must be null or a handle from [`rnm_kernel_new`] that has not been freed.
 */
void rnm_kernel_free(struct RnmKernel *k);

/**
 * Number of orthonormal functions in the kernel, or 0 for a null handle.
 *
 * # Safety
 * `k` must be null or a live handle.
 */
size_t rnm_kernel_size(const struct RnmKernel *k);

/**
 * `K_n(z, w)`.
 *
 * # Safety
 * `k` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_kernel_eval(const struct RnmKernel *k,
                               struct RnmComplex z,
                               struct RnmComplex w,
                               struct RnmComplex *out);

/**
 * One-point density `K_n(z, z) / n`.
 *
 * # Safety
 * `k` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_kernel_density(const struct RnmKernel *k, struct RnmComplex z, double *out);

/**
 * Number variance of a disc by kernel quadrature.
 *
 * # Safety
 * `k` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_variance_disc_quadrature(const struct RnmKernel *k,
                                            struct RnmComplex center,
                                            double radius,
                                            size_t budget,
                                            double *out);

/**
 * Number variance of the centred disc of radius `a` by exact Bernoulli sums
 * (radial potentials only).
 *
 * # Safety
 * `p` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_variance_radial_exact(const struct RnmPotential *p,
                                         size_t n,
                                         double a,
                                         double *out);

/**
 * Leading-order number variance of a disc inside the droplet.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for one write.
 */
enum RnmStatus rnm_bulk_prediction_disc(const struct RnmPotential *p,
                                        struct RnmComplex center,
                                        double radius,
                                        size_t n,
                                        double *out);

/**
 * Edge profile `f(delta)`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum RnmStatus rnm_edge_profile(double delta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RNMVAR_H */
