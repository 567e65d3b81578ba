#ifndef BIPBETA_H
#define BIPBETA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BbStatus {
  BB_STATUS_OK = 0,
  BB_STATUS_NULL_POINTER = 1,
  BB_STATUS_INVALID_ARGUMENT = 2,
  BB_STATUS_INVALID_GRAPH = 3,
  BB_STATUS_NUMERICAL = 4,
  BB_STATUS_BUFFER_TOO_SMALL = 5,
  BB_STATUS_PANIC = 6,
} BbStatus;

typedef enum BbMethod {
  BB_METHOD_NEWTON_EXACT = 0,
  BB_METHOD_NEWTON_APPROX = 1,
  BB_METHOD_FIXED_POINT = 2,
} BbMethod;

typedef enum BbExistence {
  BB_EXISTENCE_EXISTS = 0,
  // A degree is 0 or maximal, so no finite MLE exists.
  BB_EXISTENCE_BOUNDARY_DEGREE = 1,
  BB_EXISTENCE_DIVERGED = 2,
  BB_EXISTENCE_MAX_ITER = 3,
} BbExistence;

typedef enum BbSide {
  BB_SIDE_EVENT = 0,
  BB_SIDE_ACTOR = 1,
} BbSide;

// Opaque fit result.
typedef struct BbFit BbFit;

// Opaque binary event-by-actor matrix.
typedef struct BbGraph BbGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a graph from a row-major `m × n` matrix of 0/1 bytes.
//
// # Safety
// `x` must point to `m * n` readable bytes and `out` must be writable.
enum BbStatus bb_graph_from_dense(size_t m, size_t n, const uint8_t *x, struct BbGraph **out);

// # Safety
// `g` must be null or a handle from this library not yet freed.
void bb_graph_free(struct BbGraph *g);

// # Safety
// `g` must be a live handle; `m` and `n` must be writable.
enum BbStatus bb_graph_dims(const struct BbGraph *g, size_t *m, size_t *n);

// Row-major copy of the 0/1 entries into `x`, which holds `len` bytes.
//
// # Safety
// `g` must be a live handle and `x` valid for `len` writes.
enum BbStatus bb_graph_entries(const struct BbGraph *g, uint8_t *x, size_t len);

// New graph with every zero-degree event and actor removed.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum BbStatus bb_graph_prune(const struct BbGraph *g, struct BbGraph **out);

// Samples a graph with `alpha[0..m]` and `beta[0..n-1]`; the last actor is
// the reference with parameter 0.
//
// # Safety
// `alpha` must hold `m` values, `beta` `n - 1` values, and `out` be writable.
enum BbStatus bb_graph_sample(size_t m,
                              size_t n,
                              const double *alpha,
                              const double *beta,
                              uint64_t seed,
                              struct BbGraph **out);

// Fits the model. `tol <= 0` and `max_iter == 0` select the defaults.
//
// Non-existence of the MLE is not an error: the fit handle is returned and
// [`bb_fit_existence`] reports it.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum BbStatus bb_fit(const struct BbGraph *g,
                     enum BbMethod method,
                     double tol,
                     size_t max_iter,
                     struct BbFit **out);

// # Safety
// `f` must be null or a handle from [`bb_fit`] not yet freed.
void bb_fit_free(struct BbFit *f);

// # Safety
// `f` must be a live handle and `out` writable.
enum BbStatus bb_fit_existence(const struct BbFit *f, enum BbExistence *out);

// # Safety
// `f` must be a live handle and both outputs writable.
enum BbStatus bb_fit_summary(const struct BbFit *f,
                             size_t *iterations,
                             double *score_norm,
                             double *log_likelihood);

// Copies `α̂` (m values) and `β̂` without the reference actor (n − 1 values).
//
// # Safety
// `alpha` and `beta` must be valid for `alpha_len` and `beta_len` writes.
enum BbStatus bb_fit_theta(const struct BbFit *f,
                           double *alpha,
                           size_t alpha_len,
                           double *beta,
                           size_t beta_len);

// Plug-in standard errors, same layout as [`bb_fit_theta`].
//
// # Safety
// `se_alpha` and `se_beta` must be valid for the given lengths.
enum BbStatus bb_fit_standard_errors(const struct BbFit *f,
                                     double *se_alpha,
                                     size_t alpha_len,
                                     double *se_beta,
                                     size_t beta_len);

// Wald interval for the difference of two parameters on one side.
// Indices are 0-based; actor index `n − 1` is the reference actor.
//
// # Safety
// `f` must be a live handle; `low` and `high` writable.
enum BbStatus bb_fit_contrast_interval(const struct BbFit *f,
                                       enum BbSide side,
                                       size_t i,
                                       size_t j,
                                       double level,
                                       double *low,
                                       double *high);

// Copies the last error message of this thread, NUL-terminated and
// truncated to fit. Returns the full message length without the NUL, so a
// caller can size a buffer with a first call passing `len = 0`.
//
// # Safety
// `buf` must be valid for `len` writes, or null when `len` is 0.
size_t bb_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIPBETA_H */
