#ifndef TODA_H
#define TODA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TodaStatus {
  TODA_STATUS_OK = 0,
  TODA_STATUS_NULL_POINTER = 1,
  TODA_STATUS_INVALID_ARGUMENT = 2,
  TODA_STATUS_INVALID_WINDOW = 3,
  TODA_STATUS_INVALID_POLYNOMIAL = 4,
  TODA_STATUS_UNSUPPORTED = 5,
  TODA_STATUS_STRUCTURE_VIOLATION = 6,
  TODA_STATUS_FLOW_BREAKDOWN = 7,
  TODA_STATUS_INTEGRITY = 8,
  TODA_STATUS_POLE = 9,
  TODA_STATUS_BUFFER_TOO_SMALL = 10,
  TODA_STATUS_PARSE = 11,
  TODA_STATUS_PANIC = 12,
} TodaStatus;

typedef enum TodaBoundary {
  TODA_BOUNDARY_PERIODIC = 0,
  TODA_BOUNDARY_EVENTUALLY_FREE = 1,
} TodaBoundary;

// Opaque Jacobi window.
typedef struct TodaWindow TodaWindow;

typedef struct TodaComplex {
  double re;
  double im;
} TodaComplex;

// Row major 2x2 complex matrix.
typedef struct TodaMat2 {
  struct TodaComplex m[2][2];
} TodaMat2;

typedef struct TodaMasterResiduals {
  double r1;
  double r2;
  double r3;
} TodaMasterResiduals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *toda_last_error_message(void);

// # Safety
// `a` and `b` point to `sites` doubles; `out` is writable.
enum TodaStatus toda_window_new(const double *a,
                                const double *b,
                                size_t sites,
                                enum TodaBoundary boundary,
                                struct TodaWindow **out_window);

// Parses a window from TOML text (`sites`, `boundary`, `a`, `b` keys).
//
// # Safety
// `text` is a nul-terminated string; `out` is writable.
enum TodaStatus toda_window_from_toml(const char *text, struct TodaWindow **out_window);

// # Safety
// `w` is null or came from this library and is not used afterwards.
void toda_window_free(struct TodaWindow *w);

// # Safety
// `w` is a live window; `out` is writable.
enum TodaStatus toda_window_sites(const struct TodaWindow *w, size_t *out_sites);

// Copies the coefficients into `a` and `b`, each of length `len == sites`.
//
// # Safety
// `w` is a live window; `a` and `b` are writable for `len` doubles.
enum TodaStatus toda_window_get(const struct TodaWindow *w, double *a, double *b, size_t len);

// `(J^k)[n, n]`.
//
// # Safety
// `w` is a live window; `out` is writable.
enum TodaStatus toda_diag_entry(const struct TodaWindow *w,
                                size_t k,
                                ptrdiff_t n,
                                double *out_value);

// `(J^k)[n, n + 1]`.
//
// # Safety
// `w` is a live window; `out` is writable.
enum TodaStatus toda_offdiag_entry(const struct TodaWindow *w,
                                   size_t k,
                                   ptrdiff_t n,
                                   double *out_value);

// Ascending eigenvalues of the window matrix, `len == sites`.
//
// # Safety
// `w` is a live window; `eigenvalues` is writable for `len` doubles.
enum TodaStatus toda_spectrum(const struct TodaWindow *w, double *eigenvalues, size_t len);

// Integrates the flow with coefficients `p_1..p_d` to time `t`; the result
// is a new window.
//
// # Safety
// `w` is a live window; `coeffs` holds `degree` doubles; `out` is writable.
enum TodaStatus toda_evolve(const struct TodaWindow *w,
                            const double *coeffs,
                            size_t degree,
                            double t,
                            double dt,
                            struct TodaWindow **out_window);

// One-step transfer matrix at site `n`.
//
// # Safety
// `w` is a live window; `out` is writable.
enum TodaStatus toda_transfer_matrix(const struct TodaWindow *w,
                                     ptrdiff_t n,
                                     struct TodaComplex z,
                                     struct TodaMat2 *out_matrix);

// Cocycle `T(t, J)` at site `n`.
//
// # Safety
// `w` is a live window; `coeffs` holds `degree` doubles; `out` is writable.
enum TodaStatus toda_evolve_t(const struct TodaWindow *w,
                              const double *coeffs,
                              size_t degree,
                              ptrdiff_t n,
                              struct TodaComplex z,
                              double t,
                              double dt,
                              struct TodaMat2 *out_matrix);

// Weyl m-functions at site `n`; `Im z > 0`, eventually free windows only.
//
// # Safety
// `w` is a live window; both outputs are writable.
enum TodaStatus toda_m_functions(const struct TodaWindow *w,
                                 ptrdiff_t n,
                                 struct TodaComplex z,
                                 struct TodaComplex *m_plus,
                                 struct TodaComplex *m_minus);

// Residuals of the three generator identities at site `n`.
//
// # Safety
// `w` is a live window; `coeffs` holds `degree` doubles; `out` is writable.
enum TodaStatus toda_check_master_equations(const struct TodaWindow *w,
                                            ptrdiff_t n,
                                            const double *coeffs,
                                            size_t degree,
                                            struct TodaMasterResiduals *out_residuals);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TODA_H */
