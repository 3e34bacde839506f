/* C interface to libkls: Karhunen-Loeve decompositions, KL path synthesis
 * and the accompanying Monte Carlo analyses.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns a kls_status; on failure kls_last_error()
 * describes the cause (thread-local, valid until the next failing call on
 * the same thread). Array outputs are written into caller-provided buffers
 * whose required lengths are given by the size accessors. */
#ifndef KLS_KLS_H
#define KLS_KLS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(KLS_BUILDING_LIBRARY)
#    define KLS_API __declspec(dllexport)
#  else
#    define KLS_API __declspec(dllimport)
#  endif
#else
#  define KLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kls_status {
  KLS_OK = 0,
  KLS_ERR_INVALID_ARGUMENT = 1,
  KLS_ERR_INVALID_DENSITY = 2,
  KLS_ERR_DEGENERATE_MEASURE = 3,
  KLS_ERR_UNSUPPORTED_POINT = 4,
  KLS_ERR_GRID_MISMATCH = 5,
  KLS_ERR_NUMERIC = 6,
  KLS_ERR_DEGENERATE_KERNEL = 7,
  KLS_ERR_UNSUPPORTED = 8,
  KLS_ERR_HYPOTHESIS_VIOLATED = 9,
  KLS_ERR_INSUFFICIENT_DATA = 10,
  KLS_ERR_INSUFFICIENT_RANK = 11,
  KLS_ERR_INTERNAL = 99
} kls_status;

typedef struct kls_grid kls_grid;
typedef struct kls_kernel kls_kernel;
typedef struct kls_decomposition kls_decomposition;

KLS_API const char* kls_version(void);
KLS_API const char* kls_last_error(void);
KLS_API const char* kls_status_name(kls_status status);

/* Strings returned through char** are heap-allocated; release them here. */
KLS_API void kls_string_free(char* s);

/* Non-fatal diagnostics (e.g. symmetrised tabulated kernels). NULL restores
 * the default stderr printer. */
typedef void (*kls_warning_fn)(const char* message, void* user);
KLS_API void kls_set_warning_callback(kls_warning_fn fn, void* user);

/* ---- grids ------------------------------------------------------------ */

typedef enum kls_rule { KLS_RULE_UNIFORM_MIDPOINT = 0, KLS_RULE_GAUSS_LEGENDRE = 1, KLS_RULE_WEIGHTED = 2 } kls_rule;

KLS_API kls_status kls_grid_uniform(double a, double b, size_t n, kls_grid** out);
KLS_API kls_status kls_grid_gauss(double a, double b, size_t n, kls_grid** out);
KLS_API kls_status kls_grid_create(double a, double b, const double* nodes, const double* weights,
                                   size_t n, kls_rule rule, kls_grid** out);
typedef double (*kls_density_fn)(double t, void* user);
KLS_API kls_status kls_grid_reweight(const kls_grid* grid, kls_density_fn density, void* user,
                                     kls_grid** out);
KLS_API kls_status kls_grid_from_json(const char* json, kls_grid** out);
KLS_API kls_status kls_grid_to_json(const kls_grid* grid, char** out);
KLS_API void kls_grid_free(kls_grid* grid);

KLS_API size_t kls_grid_size(const kls_grid* grid);
KLS_API double kls_grid_a(const kls_grid* grid);
KLS_API double kls_grid_b(const kls_grid* grid);
KLS_API kls_rule kls_grid_rule(const kls_grid* grid);
KLS_API void kls_grid_nodes(const kls_grid* grid, double* out);
KLS_API void kls_grid_weights(const kls_grid* grid, double* out);
KLS_API kls_status kls_grid_inner(const kls_grid* grid, const double* f, const double* g, size_t n,
                                  double* out);

/* ---- kernels ---------------------------------------------------------- */

KLS_API kls_status kls_kernel_brownian_motion(double sigma2, kls_kernel** out);
KLS_API kls_status kls_kernel_brownian_bridge(double sigma2, kls_kernel** out);
KLS_API kls_status kls_kernel_ornstein_uhlenbeck(double a, double sigma, kls_kernel** out);
KLS_API kls_status kls_kernel_matern(double a, double sigma, double alpha, int d, kls_kernel** out);
/* gram is n x n row-major, n = kls_grid_size(grid). */
KLS_API kls_status kls_kernel_tabulated(const kls_grid* grid, const double* gram, size_t n,
                                        kls_kernel** out);
KLS_API kls_status kls_kernel_from_json(const char* json, kls_kernel** out);
KLS_API kls_status kls_kernel_to_json(const kls_kernel* kernel, char** out);
KLS_API void kls_kernel_free(kls_kernel* kernel);

KLS_API kls_status kls_kernel_eval(const kls_kernel* kernel, double s, double t, double* out);
/* out receives n*n doubles, row-major. */
KLS_API kls_status kls_kernel_gram(const kls_kernel* kernel, const kls_grid* grid, double* out);
KLS_API kls_status kls_kernel_trace(const kls_kernel* kernel, const kls_grid* grid, double* out);
/* Copies the kernel label (e.g. "BrownianMotion{sigma2=1}"). */
KLS_API kls_status kls_kernel_tag(const kls_kernel* kernel, char** out);

/* ---- spectral decomposition ------------------------------------------- */

/* max_rank = 0 keeps every eigenpair above drop_tol * mu_1. */
KLS_API kls_status kls_decompose(const kls_kernel* kernel, const kls_grid* grid, size_t max_rank,
                                 double drop_tol, kls_decomposition** out);
/* Rebuilds a decomposition from stored data; efuns is rank x n row-major. */
KLS_API kls_status kls_decomposition_create(const kls_grid* grid, const double* mu,
                                            const double* efuns, size_t rank,
                                            const char* kernel_tag, double drop_tol,
                                            kls_decomposition** out);
KLS_API kls_status kls_decomposition_truncate(const kls_decomposition* dec, size_t m,
                                              kls_decomposition** out);
KLS_API void kls_decomposition_free(kls_decomposition* dec);

KLS_API size_t kls_decomposition_rank(const kls_decomposition* dec);
KLS_API size_t kls_decomposition_grid_size(const kls_decomposition* dec);
KLS_API double kls_decomposition_drop_tol(const kls_decomposition* dec);
KLS_API void kls_decomposition_mu(const kls_decomposition* dec, double* out);
KLS_API void kls_decomposition_efuns(const kls_decomposition* dec, double* out);
/* Returns a new grid handle equal to the decomposition grid. */
KLS_API kls_status kls_decomposition_grid(const kls_decomposition* dec, kls_grid** out);
KLS_API kls_status kls_decomposition_kernel_tag(const kls_decomposition* dec, char** out);

KLS_API kls_status kls_nystrom_extend(const kls_decomposition* dec, const kls_kernel* kernel,
                                      double t, double* out);
KLS_API kls_status kls_mercer_residual(const kls_decomposition* dec, const kls_kernel* kernel,
                                       const double* probe_s, const double* probe_t,
                                       size_t count, double* max_abs, double* max_rel_diag);
/* KLS_OK when every decomposition invariant holds; otherwise KLS_ERR_NUMERIC
 * with the violated invariant in kls_last_error(). */
KLS_API kls_status kls_check_invariants(const kls_decomposition* dec, const kls_kernel* kernel);

/* ---- power spaces ----------------------------------------------------- */

typedef enum kls_verdict { KLS_FINITE = 0, KLS_INFINITE = 1, KLS_INDETERMINATE = 2 } kls_verdict;

typedef struct kls_decay_fit {
  double alpha_hat;
  double log_c_hat;
  size_t fit_lo; /* 1-based inclusive */
  size_t fit_hi;
  double rms_residual;
  double alpha_ci_low;
  double alpha_ci_high;
} kls_decay_fit;

typedef struct kls_summability {
  double partial;
  double tail_low;
  double tail_high;
  kls_verdict verdict;
} kls_summability;

KLS_API kls_status kls_fourier_coeffs(const kls_decomposition* dec, const double* path, size_t n,
                                      double* out);
KLS_API kls_status kls_power_norm(const kls_decomposition* dec, const double* z, size_t r,
                                  double gamma, double* out);
/* kernel may be NULL when s and t are grid nodes. */
KLS_API kls_status kls_power_kernel(const kls_decomposition* dec, const kls_kernel* kernel,
                                    double gamma, double s, double t, double* out);
KLS_API kls_status kls_summability_check(const kls_decomposition* dec, double beta,
                                         const kls_decay_fit* fit, kls_summability* out);

/* ---- sampling --------------------------------------------------------- */

typedef enum kls_law_kind { KLS_LAW_GAUSSIAN = 0, KLS_LAW_RADEMACHER = 1, KLS_LAW_STUDENT_T = 2 } kls_law_kind;

typedef struct kls_law {
  kls_law_kind kind;
  double dof; /* Student-t only, > 4 */
} kls_law;

/* Draws from the stream (seed, stream_id); out has rank entries. */
KLS_API kls_status kls_sample_coefficients(const kls_decomposition* dec, kls_law law,
                                           uint64_t seed, uint64_t stream_id, double* out);
KLS_API kls_status kls_synthesize_path(const kls_decomposition* dec, const double* z, size_t r,
                                       size_t m, double* out);
/* Replicates first_replicate .. first_replicate + replicates - 1.
 * values: replicates x n row-major; coeffs (nullable): replicates x rank. */
KLS_API kls_status kls_sample_batch(const kls_decomposition* dec, kls_law law, size_t m,
                                    size_t replicates, uint64_t seed, uint64_t first_replicate,
                                    unsigned threads, double* values, double* coeffs);

/* ---- analysis --------------------------------------------------------- */

typedef enum kls_norm_kind { KLS_NORM_L2 = 0, KLS_NORM_POWER = 1 } kls_norm_kind;

/* Arrays empirical, stderr_out and predicted have `count` entries. */
KLS_API kls_status kls_truncation_curve(const kls_decomposition* dec, kls_law law,
                                        kls_norm_kind norm, double beta,
                                        const size_t* truncations, size_t count,
                                        size_t replicates, uint64_t seed, unsigned threads,
                                        double* empirical, double* stderr_out,
                                        double* predicted);
KLS_API kls_status kls_pointwise_variance_residual(const kls_decomposition* dec,
                                                   const kls_kernel* kernel, size_t m, double t,
                                                   double* out);
/* fit_lo = fit_hi = 0 selects the default range. */
KLS_API kls_status kls_fit_decay(const kls_decomposition* dec, size_t fit_lo, size_t fit_hi,
                                 kls_decay_fit* out);

typedef struct kls_certificate {
  double m_hat;
  int d;
  int empty;
  double range_low;
  double range_high;
} kls_certificate;

/* basis (nullable) receives the textual justification. */
KLS_API kls_status kls_smoothness_certificate(const kls_decay_fit* fit, int d,
                                              kls_certificate* out, char** basis);

/* survival and used have `count` entries; used[k] = 0 when P is 0 or 1. */
KLS_API kls_status kls_small_ball(const kls_decomposition* dec, const kls_decay_fit* fit,
                                  double beta, const double* epsilons, size_t count,
                                  size_t replicates, uint64_t seed, kls_law law,
                                  unsigned threads, double hypothesis_margin, double* survival,
                                  int* used, double* fitted_exponent,
                                  double* predicted_exponent);

/* mean_partial_sums has rank entries. */
KLS_API kls_status kls_dichotomy_probe(const kls_decomposition* dec, kls_law law, double beta,
                                       size_t replicates, uint64_t seed, unsigned threads,
                                       double window, double threshold,
                                       double* converged_fraction, double* mean_partial_sums);

#ifdef __cplusplus
}
#endif

#endif /* KLS_KLS_H */
