#ifndef NGRC_CONTROL_H
#define NGRC_CONTROL_H

#pragma once

/* Generated by cbindgen. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum NgrcStatus {
  NGRC_STATUS_OK = 0,
  NGRC_STATUS_NULL_POINTER = 1,
  NGRC_STATUS_INVALID_ARGUMENT = 2,
  NGRC_STATUS_DIMENSION = 3,
  NGRC_STATUS_NON_INVERTIBLE = 4,
  NGRC_STATUS_GENERATION = 5,
  NGRC_STATUS_TRAINING = 6,
  NGRC_STATUS_ESCAPED = 7,
  NGRC_STATUS_JSON = 8,
  NGRC_STATUS_PANIC = 9,
} NgrcStatus;

/**
 * Built-in control tasks on the Hénon map.
 */
typedef enum NgrcTask {
  NGRC_TASK_PU1_TO_PU2 = 0,
  NGRC_TASK_PERIOD4 = 1,
  NGRC_TASK_ARBITRARY = 2,
} NgrcTask;

/**
 * Opaque trained model.
 */
typedef struct NgrcModelHandle NgrcModelHandle;

/**
 * Opaque closed-loop trace.
 */
typedef struct NgrcTraceHandle NgrcTraceHandle;

/**
 * One closed-loop iteration: state before the step, applied control,
 * desired output and tracking error.
 */
typedef struct NgrcTraceRow {
  size_t iter;
  double x;
  double y;
  double u;
  double x_des;
  double e;
} NgrcTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *ngrc_last_error(void);

/**
 * Release a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ngrc_string_free(char *s);

/**
 * Train a scalar Hénon model from one random trajectory of `m_train + m_test`
 * samples, choosing the ridge parameter on the test rows. Gives the same
 * model as `ngrc-control train` with the same seed and settings.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum NgrcStatus ngrc_model_train_henon(uint64_t seed,
                                       double sigma_d,
                                       size_t m_train,
                                       size_t m_test,
                                       struct NgrcModelHandle **out);

/**
 * Load a model from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NgrcStatus ngrc_model_from_json(const char *json, struct NgrcModelHandle **out);

/**
 * Serialize a model to JSON. Free the result with [`ngrc_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum NgrcStatus ngrc_model_to_json(const struct NgrcModelHandle *model, char **out);

/**
 * Release a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not have been freed.
 */
void ngrc_model_free(struct NgrcModelHandle *model);

/**
 * Number of outputs `d` and readout columns `d_tot`.
 *
 * # Safety
 * `model` must be a live handle; the output pointers must be writable.
 */
enum NgrcStatus ngrc_model_dims(const struct NgrcModelHandle *model,
                                size_t *d,
                                size_t *d_tot,
                                size_t *d_lin);

/**
 * Copy the readout `[w_u | w_x]` in row-major order into `out`, which must
 * hold exactly `d * d_tot` values.
 *
 * # Safety
 * `model` must be a live handle; `out` must point to `len` writable values.
 */
enum NgrcStatus ngrc_model_weights(const struct NgrcModelHandle *model, double *out, size_t len);

/**
 * One-step prediction with control: `out = W [u | c | x | nonlinear(x)]`.
 *
 * # Safety
 * `model` must be a live handle; the buffers must hold the given lengths.
 */
enum NgrcStatus ngrc_model_predict(const struct NgrcModelHandle *model,
                                   const double *x,
                                   size_t x_len,
                                   const double *u,
                                   size_t u_len,
                                   double *out,
                                   size_t out_len);

/**
 * One-step prediction without the control term.
 *
 * # Safety
 * `model` must be a live handle; the buffers must hold the given lengths.
 */
enum NgrcStatus ngrc_model_predict_unforced(const struct NgrcModelHandle *model,
                                            const double *x,
                                            size_t x_len,
                                            double *out,
                                            size_t out_len);

/**
 * Scalar control law `u = (x_des_next - F(x) + gain * e) / w_u`.
 *
 * # Safety
 * `model` must be a live handle; `x` must hold `x_len` values; `u` writable.
 */
enum NgrcStatus ngrc_control_signal(const struct NgrcModelHandle *model,
                                    const double *x,
                                    size_t x_len,
                                    double x_des_next,
                                    double e,
                                    double gain,
                                    double *u);

/**
 * Noise-free controlled Hénon step with parameters `a`, `b`, `g`.
 *
 * # Safety
 * `x_out` and `y_out` must be writable.
 */
enum NgrcStatus ngrc_henon_step(double x,
                                double y,
                                double u,
                                double a,
                                double b,
                                double g,
                                double *x_out,
                                double *y_out);

/**
 * Run the closed loop for `task` on the default Hénon map with process
 * noise `sigma_d`. The run stops early if the state escapes.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum NgrcStatus ngrc_closed_loop(const struct NgrcModelHandle *model,
                                 enum NgrcTask task,
                                 double gain,
                                 double sigma_d,
                                 size_t n_iters,
                                 uint64_t seed,
                                 struct NgrcTraceHandle **out);

/**
 * Number of recorded iterations; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t ngrc_trace_len(const struct NgrcTraceHandle *trace);

/**
 * Whether the run ended because the state escaped.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
bool ngrc_trace_escaped(const struct NgrcTraceHandle *trace);

/**
 * Copy iteration `i` into `row`.
 *
 * # Safety
 * `trace` must be a live handle; `row` must be writable.
 */
enum NgrcStatus ngrc_trace_row(const struct NgrcTraceHandle *trace,
                               size_t i,
                               struct NgrcTraceRow *row);

/**
 * Release a trace. Null is ignored.
 *
 * # Safety
 * `trace` must come from this library and not have been freed.
 */
void ngrc_trace_free(struct NgrcTraceHandle *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NGRC_CONTROL_H */
