#ifndef FSO_CAPACITY_H
#define FSO_CAPACITY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsoStatus {
  FSO_STATUS_OK = 0,
  FSO_STATUS_NULL_POINTER = 1,
  // Invalid parameter or argument outside the function's domain.
  FSO_STATUS_INVALID = 2,
  // Numeric failure: peak not bracketed, convergence condition, degenerate channel.
  FSO_STATUS_NUMERIC = 3,
  // A Rust panic was caught at the boundary.
  FSO_STATUS_PANIC = 4,
} FsoStatus;

typedef enum FsoModel {
  FSO_MODEL_THERMAL = 0,
  FSO_MODEL_POINTING = 1,
  FSO_MODEL_TURBULENCE = 2,
  FSO_MODEL_EGC = 3,
  FSO_MODEL_MRC = 4,
  FSO_MODEL_SHOTNOISE = 5,
} FsoModel;

// Opaque channel handle.
typedef struct FsoChannel FsoChannel;

// Link parameters in SI units. `nu_bar <= 0` means no transit-time limit.
typedef struct FsoParams {
  double d;
  double eps0;
  double eps_r;
  double resistance;
  double nu_bar;
  double mu0;
  double rho;
  double x0;
  double y0;
  double n0;
  double lambda_b;
  double sigma_p;
  double eta;
  double array_area;
  uint32_t detectors;
  double photon_scale;
} FsoParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default parameter set (0.1 um depletion, 10 ohm, 10 mW peak, 2 mm beam, ...).
struct FsoParams fso_params_default(void);

// Validates `params` and creates a channel. `*out` is set to NULL on failure.
//
// # Safety
// `params` must point to a valid `FsoParams`; `out` must be writable.
enum FsoStatus fso_channel_new(const struct FsoParams *params, struct FsoChannel **out);

// Releases a channel. NULL is ignored.
//
// # Safety
// `ch` must come from `fso_channel_new` and not be used afterwards.
void fso_channel_free(struct FsoChannel *ch);

// Capacity (bit/s) at detector `area` (m^2). Fading models return the
// ergodic capacity; array models use the configured tiling.
//
// # Safety
// `ch` must be a live handle; `out_bps` must be writable.
enum FsoStatus fso_capacity(const struct FsoChannel *ch,
                            enum FsoModel model,
                            double area,
                            double *out_bps);

// Capacity-maximizing area. Closed-form models ignore the window; numeric
// ones search `[a_lo, a_hi]`.
//
// # Safety
// `ch` must be a live handle; both out-pointers must be writable.
enum FsoStatus fso_optimal_area(const struct FsoChannel *ch,
                                enum FsoModel model,
                                double a_lo,
                                double a_hi,
                                double *out_area,
                                double *out_bps);

// Fills `areas` and `capacities` (each `points` long) with a log-spaced
// sweep from `a_lo` to `a_hi`.
//
// # Safety
// `ch` must be a live handle; both arrays must hold `points` doubles.
enum FsoStatus fso_curve(const struct FsoChannel *ch,
                         enum FsoModel model,
                         double a_lo,
                         double a_hi,
                         size_t points,
                         double *areas,
                         double *capacities);

// Index of the best of `n` candidate areas (strictly increasing) for a
// peak-intensity estimate. Ties go to the smaller area.
//
// # Safety
// `ch` must be a live handle; `areas` must hold `n` doubles; `out_index`
// must be writable.
enum FsoStatus fso_select(const struct FsoChannel *ch,
                          enum FsoModel model,
                          const double *areas,
                          size_t n,
                          double intensity,
                          size_t *out_index);

// Principal branch `W0(y)` for `y >= -1/e`.
//
// # Safety
// `out` must be writable.
enum FsoStatus fso_lambert_w0(double y, double *out);

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call into this library on the thread.
const char *fso_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSO_CAPACITY_H */
