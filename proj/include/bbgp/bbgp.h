#ifndef BBGP_BBGP_H
#define BBGP_BBGP_H

/*
 * C interface to the bridge-kernel GP library.
 *
 * Every function returns a bbgp_status. On failure the message is available
 * from bbgp_last_error() on the calling thread until the next call. Objects
 * are opaque handles released with the matching *_destroy function, which
 * accepts NULL.
 *
 * Points are passed as row-major arrays of npoints * dim doubles. Matrices
 * are row-major.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BBGP_BUILDING_LIBRARY)
#    define BBGP_API __declspec(dllexport)
#  else
#    define BBGP_API __declspec(dllimport)
#  endif
#else
#  define BBGP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bbgp_status {
    BBGP_OK = 0,
    BBGP_ERR_INVALID_ARGUMENT = 1,
    BBGP_ERR_NUMERICAL = 2,
    BBGP_ERR_RESOURCE = 3,
    BBGP_ERR_INTERNAL = 4
} bbgp_status;

BBGP_API const char* bbgp_version(void);
BBGP_API const char* bbgp_status_string(bbgp_status status);
BBGP_API const char* bbgp_last_error(void);

typedef enum bbgp_log_level { BBGP_LOG_INFO = 0, BBGP_LOG_WARNING = 1 } bbgp_log_level;
typedef void (*bbgp_log_fn)(bbgp_log_level level, const char* message, void* user);

/* NULL restores the default sink (warnings to stderr). */
BBGP_API void bbgp_set_log_callback(bbgp_log_fn fn, void* user);

/* ---- kernels ---------------------------------------------------------- */

typedef enum bbgp_kernel_family {
    BBGP_KERNEL_BRIDGE = 0,
    BBGP_KERNEL_HELMHOLTZ = 1, /* param = omega, d = 1 */
    BBGP_KERNEL_POWER = 2      /* param = p in (1/2, 1], d = 1 */
} bbgp_kernel_family;

typedef struct bbgp_kernel bbgp_kernel;
typedef struct bbgp_field bbgp_field;
typedef struct bbgp_source bbgp_source;

/* order = 0 selects the default truncation for the dimension. */
BBGP_API bbgp_status bbgp_kernel_create(bbgp_kernel_family family, int dim, int order, double beta, double param,
                                        bbgp_kernel** out);
BBGP_API void bbgp_kernel_destroy(bbgp_kernel* kernel);
BBGP_API bbgp_status bbgp_kernel_info(const bbgp_kernel* kernel, int* dim, int* order, double* beta);
BBGP_API bbgp_status bbgp_kernel_eval(const bbgp_kernel* kernel, const double* x, const double* xp, double* out);
/* Eigenvalues without the beta factor, canonical order; `out` holds order^dim values. */
BBGP_API bbgp_status bbgp_kernel_eigenvalues(const bbgp_kernel* kernel, double* out, size_t capacity);
BBGP_API bbgp_status bbgp_kernel_rkhs_sq_norm(const bbgp_kernel* kernel, const bbgp_field* u, double* out);

/* ---- fields and sources ----------------------------------------------- */

/* coeffs may be NULL for the zero field; otherwise order^dim values. */
BBGP_API bbgp_status bbgp_field_create(int dim, int order, const double* coeffs, bbgp_field** out);
BBGP_API void bbgp_field_destroy(bbgp_field* field);
BBGP_API bbgp_status bbgp_field_size(const bbgp_field* field, int* dim, int* order, size_t* count);
BBGP_API bbgp_status bbgp_field_coefficients(const bbgp_field* field, double* out, size_t capacity);
BBGP_API bbgp_status bbgp_field_eval(const bbgp_field* field, const double* points, size_t npoints, double* out);
BBGP_API bbgp_status bbgp_field_l2_norm(const bbgp_field* field, double* out);
/* Quadrature projection of a source onto the first order^dim basis functions. */
BBGP_API bbgp_status bbgp_field_project(const bbgp_source* f, int order, bbgp_field** out);

/* Arithmetic expression in x (or x1..xd) with optional parameters theta1..thetam. */
BBGP_API bbgp_status bbgp_source_from_expression(const char* text, int dim, const double* theta, size_t ntheta,
                                                 bbgp_source** out);
BBGP_API bbgp_status bbgp_source_from_field(const bbgp_field* coeffs, bbgp_source** out);
BBGP_API void bbgp_source_destroy(bbgp_source* source);
BBGP_API bbgp_status bbgp_source_parameter_count(const bbgp_source* source, int* out);
BBGP_API bbgp_status bbgp_source_eval(const bbgp_source* source, const double* points, size_t npoints, double* out);

/* ---- PDE -------------------------------------------------------------- */

BBGP_API bbgp_status bbgp_solve(const bbgp_source* q, const bbgp_kernel* kernel, bbgp_field** u0);
BBGP_API bbgp_status bbgp_energy(const bbgp_field* u, const bbgp_source* q, double* out);
BBGP_API bbgp_status bbgp_energy_rkhs_shift(const bbgp_field* u, const bbgp_source* q, const bbgp_kernel* kernel,
                                            double* out);
BBGP_API bbgp_status bbgp_half_source_energy(const bbgp_source* q, const bbgp_kernel* kernel, double* out);

/* ---- regression ------------------------------------------------------- */

typedef enum bbgp_hyper_kind { BBGP_PRIOR_FLAT = 0, BBGP_PRIOR_JEFFREYS = 1, BBGP_PRIOR_FIXED = 2 } bbgp_hyper_kind;

typedef struct bbgp_hyper_prior {
    bbgp_hyper_kind kind;
    double beta0; /* fixed only */
} bbgp_hyper_prior;

typedef struct bbgp_beta_estimate {
    double beta;
    double objective;
    int boundary; /* 0 interior, -1 lower end, +1 upper end of the log-beta bracket */
    int dirac_limit;
} bbgp_beta_estimate;

typedef struct bbgp_posterior bbgp_posterior;

/* Prior mean u0 is a field with the kernel truncation (usually from bbgp_solve). */
BBGP_API bbgp_status bbgp_condition(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X, size_t n,
                                    const double* y, double sigma2, bbgp_posterior** out);
BBGP_API void bbgp_posterior_destroy(bbgp_posterior* posterior);
BBGP_API bbgp_status bbgp_posterior_mean(const bbgp_posterior* posterior, const double* points, size_t npoints,
                                         double* out);
BBGP_API bbgp_status bbgp_posterior_variance(const bbgp_posterior* posterior, const double* points, size_t npoints,
                                             double* out);
BBGP_API bbgp_status bbgp_posterior_eta(const bbgp_posterior* posterior, double* out);

/* Kernel ridge regression evaluated at `points`. */
BBGP_API bbgp_status bbgp_krr(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X, size_t n,
                              const double* y, double eta, const double* points, size_t npoints, double* out);

BBGP_API bbgp_status bbgp_log_marginal_points(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X,
                                              size_t n, const double* y, double sigma2, double beta, double* out);
/* Observations d of the first m coefficients. */
BBGP_API bbgp_status bbgp_log_marginal_coefficients(const bbgp_kernel* kernel, const bbgp_field* prior_mean,
                                                    const double* d, size_t m, double sigma2, double beta, double* out);
BBGP_API bbgp_status bbgp_beta_gradient(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* d,
                                        size_t m, double sigma2, double beta, bbgp_hyper_prior hyper, double* out);
BBGP_API bbgp_status bbgp_beta_map_coefficients(const bbgp_kernel* kernel, const bbgp_field* prior_mean,
                                                const double* d, size_t m, double sigma2, bbgp_hyper_prior hyper,
                                                bbgp_beta_estimate* out);
BBGP_API bbgp_status bbgp_beta_map_points(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X,
                                          size_t n, const double* y, double sigma2, bbgp_hyper_prior hyper,
                                          bbgp_beta_estimate* out);

/* ---- source inversion ------------------------------------------------- */

typedef struct bbgp_inverse_result bbgp_inverse_result;

BBGP_API bbgp_status bbgp_invert_linear_coefficients(const bbgp_source* const* basis, size_t nbasis, const double* d,
                                                     size_t m, double sigma2, bbgp_hyper_prior hyper,
                                                     const bbgp_kernel* kernel, bbgp_inverse_result** out);
BBGP_API bbgp_status bbgp_invert_linear_points(const bbgp_source* const* basis, size_t nbasis, const double* X, size_t n,
                                               const double* y, double sigma2, bbgp_hyper_prior hyper,
                                               const bbgp_kernel* kernel, bbgp_inverse_result** out);
BBGP_API bbgp_status bbgp_invert_nonlinear_coefficients(const bbgp_source* family, const double* theta0, size_t ntheta,
                                                        const double* d, size_t m, double sigma2,
                                                        bbgp_hyper_prior hyper, const bbgp_kernel* kernel,
                                                        bbgp_inverse_result** out);
BBGP_API bbgp_status bbgp_invert_nonlinear_points(const bbgp_source* family, const double* theta0, size_t ntheta,
                                                  const double* X, size_t n, const double* y, double sigma2,
                                                  bbgp_hyper_prior hyper, const bbgp_kernel* kernel,
                                                  bbgp_inverse_result** out);
BBGP_API void bbgp_inverse_result_destroy(bbgp_inverse_result* result);
BBGP_API bbgp_status bbgp_inverse_result_size(const bbgp_inverse_result* result, size_t* ntheta);
/* mean: ntheta values; cov: ntheta * ntheta values; either may be NULL. */
BBGP_API bbgp_status bbgp_inverse_result_theta(const bbgp_inverse_result* result, double* mean, double* cov);
BBGP_API bbgp_status bbgp_inverse_result_beta(const bbgp_inverse_result* result, bbgp_beta_estimate* out);
BBGP_API bbgp_status bbgp_inverse_result_flags(const bbgp_inverse_result* result, size_t* flat_directions,
                                               int* laplace, int* converged);

/* ---- nonlinear MAP ---------------------------------------------------- */

/* Return 0 on success. `out` has nobs entries (map) or nobs * ncoeffs row-major (jacobian). */
typedef int (*bbgp_map_fn)(const double* coeffs, size_t ncoeffs, double* out, size_t nobs, void* user);

typedef struct bbgp_map_report {
    double objective;
    double gradient_norm;
    int iterations;
    int converged;
} bbgp_map_report;

BBGP_API bbgp_status bbgp_map_nonlinear(bbgp_map_fn map, bbgp_map_fn jacobian, void* user, const double* gamma,
                                        const double* y, size_t nobs, const bbgp_source* q, const bbgp_kernel* kernel,
                                        const bbgp_field* init, double gradient_tol, int max_iterations,
                                        bbgp_field** out, bbgp_map_report* report);

/* ---- sampling --------------------------------------------------------- */

typedef struct bbgp_sampler bbgp_sampler;

typedef struct bbgp_nested_report {
    int analytic_equal;
    double analytic_max_diff;
    double mc_max_deviation;
    double mc_tolerance;
    size_t draws;
    int passed;
} bbgp_nested_report;

/* Prior N(mean, beta^{-1} Sigma_F) on the first mesh_size basis functions. */
BBGP_API bbgp_status bbgp_sampler_create(const bbgp_kernel* kernel, const bbgp_field* mean, size_t mesh_size,
                                         uint64_t seed, bbgp_sampler** out);
BBGP_API bbgp_status bbgp_sampler_create_power(double p, int order, size_t mesh_size, uint64_t seed,
                                               bbgp_sampler** out);
BBGP_API void bbgp_sampler_destroy(bbgp_sampler* sampler);
BBGP_API bbgp_status bbgp_sampler_draw(const bbgp_sampler* sampler, uint64_t index, bbgp_field** out);
/* `out` receives count * npoints values, one row per draw. */
BBGP_API bbgp_status bbgp_sampler_sample_at(const bbgp_sampler* sampler, const double* points, size_t npoints,
                                            size_t count, uint64_t first, double* out);
BBGP_API bbgp_status bbgp_nested_consistency(const bbgp_sampler* small, const bbgp_sampler* large, size_t draws,
                                             bbgp_nested_report* out);

/* ---- design metrics and studies --------------------------------------- */

typedef struct bbgp_design_metrics {
    double fill;
    double separation;
    double mesh_ratio;
} bbgp_design_metrics;

typedef struct bbgp_slope_fit {
    double slope;
    double intercept;
    double half_width;
} bbgp_slope_fit;

BBGP_API bbgp_status bbgp_design_metrics_compute(const double* points, size_t npoints, int dim,
                                                 bbgp_design_metrics* out);
BBGP_API bbgp_status bbgp_fit_loglog_slope(const double* x, const double* y, size_t n, bbgp_slope_fit* out);

typedef double (*bbgp_scalar_fn)(const double* x, int dim, void* user);

typedef struct bbgp_convergence_options {
    double sigma2;
    int noisy;
    int nodes_per_interval;
} bbgp_convergence_options;

typedef struct bbgp_convergence_row {
    int n;
    double fill;
    double l2_error;
    double variance_norm;
} bbgp_convergence_row;

typedef struct bbgp_convergence_report bbgp_convergence_report;

BBGP_API bbgp_convergence_options bbgp_convergence_default_options(void);
BBGP_API bbgp_status bbgp_convergence_study(bbgp_scalar_fn truth, void* user, const bbgp_source* q_assumed,
                                            const bbgp_kernel* kernel, const int* ns, size_t count, uint64_t seed,
                                            const bbgp_convergence_options* options, bbgp_convergence_report** out);
BBGP_API void bbgp_convergence_report_destroy(bbgp_convergence_report* report);
BBGP_API bbgp_status bbgp_convergence_report_rows(const bbgp_convergence_report* report, size_t* count);
BBGP_API bbgp_status bbgp_convergence_report_row(const bbgp_convergence_report* report, size_t index,
                                                 bbgp_convergence_row* out);
BBGP_API bbgp_status bbgp_convergence_report_slopes(const bbgp_convergence_report* report, bbgp_slope_fit* error,
                                                    bbgp_slope_fit* variance);

typedef struct bbgp_model_error_options {
    size_t observed;
    double sigma2;
    int noisy;
    bbgp_hyper_prior hyper;
    const bbgp_source* const* theta_basis; /* may be NULL */
    size_t theta_basis_count;
} bbgp_model_error_options;

typedef struct bbgp_model_error_row {
    double epsilon;
    bbgp_beta_estimate beta;
    int has_formula;
    double beta_formula;
    double ratio;
    int has_jeffreys_ratio;
    double jeffreys_ratio;
    int has_theta_cov_trace;
    double theta_cov_trace;
} bbgp_model_error_row;

typedef struct bbgp_model_error_report bbgp_model_error_report;

BBGP_API bbgp_model_error_options bbgp_model_error_default_options(void);
BBGP_API bbgp_status bbgp_model_error_study(const bbgp_source* q, const bbgp_kernel* kernel,
                                            const bbgp_field* perturbation, const double* epsilons, size_t count,
                                            uint64_t seed, const bbgp_model_error_options* options,
                                            bbgp_model_error_report** out);
BBGP_API void bbgp_model_error_report_destroy(bbgp_model_error_report* report);
BBGP_API bbgp_status bbgp_model_error_report_rows(const bbgp_model_error_report* report, size_t* count);
BBGP_API bbgp_status bbgp_model_error_report_row(const bbgp_model_error_report* report, size_t index,
                                                 bbgp_model_error_row* out);

#ifdef __cplusplus
}
#endif

#endif /* BBGP_BBGP_H */
