/* plpkit C API: optimizer handles, parameter linear prediction, status codes. */

#ifndef PLPKIT_H
#define PLPKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum PlpStatus {
  PLP_STATUS_OK = 0,
  PLP_STATUS_NULL_POINTER = 1,
  PLP_STATUS_INVALID_ARGUMENT = 2,
  PLP_STATUS_LENGTH_MISMATCH = 3,
  // A non-finite parameter or prediction was produced.
  PLP_STATUS_DIVERGENCE = 4,
  // The optimizer was stepped past its configured iteration budget.
  PLP_STATUS_ITERATION_BUDGET = 5,
} PlpStatus;

// Opaque optimizer handle.
typedef struct PlpOptimizer PlpOptimizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a NUL-terminated static string.
const char *plp_version(void);

// Linear prediction over three chronological parameter snapshots of length
// `len`: writes `m23 + step * (m23 - m12)` into `out`.
//
// # Safety
// `s1`, `s2`, `s3`, and `out` must point to `len` readable (respectively
// writable) doubles.
enum PlpStatus plp_predict_buffer(const double *s1,
                                  const double *s2,
                                  const double *s3,
                                  size_t len,
                                  double step,
                                  double *out);

// Decayed momentum coefficient at step `t` of `total`.
//
// # Safety
// `out` must point to a writable double.
enum PlpStatus plp_demon_beta(uint64_t t, uint64_t total, double beta_init, double *out);

// Triangular cyclic learning rate at a 0-based iteration.
//
// # Safety
// `out` must point to a writable double.
enum PlpStatus plp_cyclic_lr(double base_lr,
                             double max_lr,
                             uint64_t half_period,
                             uint64_t iteration,
                             double *out);

// SGD-with-momentum optimizer over `n` parameters.
struct PlpOptimizer *plp_optimizer_new_sgd(size_t n, double momentum, double weight_decay);

// DEMON optimizer; returns NULL when the arguments are invalid
// (`total_iterations` of zero or `beta_init` outside (0, 1)).
struct PlpOptimizer *plp_optimizer_new_demon(size_t n,
                                             double beta_init,
                                             double weight_decay,
                                             uint64_t total_iterations);

// Adam optimizer with bias correction.
struct PlpOptimizer *plp_optimizer_new_adam(size_t n,
                                            double beta1,
                                            double beta2,
                                            double eps,
                                            double weight_decay);

// Wraps an existing optimizer in the predict-every-3-steps cycle, taking
// ownership of `base` (do not free it afterwards). Returns NULL and leaves
// `base` alive when `step` is negative.
//
// # Safety
// `base` must be a handle from a `plp_optimizer_new_*` call.
struct PlpOptimizer *plp_optimizer_wrap_plp(struct PlpOptimizer *base,
                                            double step,
                                            bool predict_identity,
                                            bool reset_velocity_on_predict);

// One in-place update of `params` from `grads` at learning rate `lr`.
//
// # Safety
// `opt` must be a live handle; `params` and `grads` must point to `len`
// doubles matching the handle's parameter count.
enum PlpStatus plp_optimizer_step(struct PlpOptimizer *opt,
                                  double *params,
                                  const double *grads,
                                  size_t len,
                                  double lr);

// Base steps taken so far (predictions are not extra steps).
//
// # Safety
// `opt` must be a live handle or NULL.
uint64_t plp_optimizer_iterations(const struct PlpOptimizer *opt);

// Number of predictions a wrapped optimizer has applied; 0 for plain
// optimizers.
//
// # Safety
// `opt` must be a live handle or NULL.
uint64_t plp_optimizer_predictions_fired(const struct PlpOptimizer *opt);

// Peak auxiliary f64 storage held by the prediction wrapper (at most four
// parameter-sized arrays); 0 for plain optimizers.
//
// # Safety
// `opt` must be a live handle or NULL.
size_t plp_optimizer_peak_aux_f64(const struct PlpOptimizer *opt);

// Releases a handle. NULL is a no-op.
//
// # Safety
// `opt` must be NULL or a handle not freed before.
void plp_optimizer_free(struct PlpOptimizer *opt);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLPKIT_H */
