#include "bbgp/bbgp.h"

#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/inverse.hpp"
#include "core/kernels.hpp"
#include "core/pde.hpp"
#include "core/regression.hpp"
#include "core/sampling.hpp"

#include <cmath>
#include <mutex>
#include <new>
#include <string>
#include <utility>

struct bbgp_kernel {
    bbgp::KernelSpec spec;
};
struct bbgp_field {
    bbgp::SpectralField value;
};
struct bbgp_source {
    bbgp::SourceModel value;
};
struct bbgp_posterior {
    bbgp::PosteriorModel value;
};
struct bbgp_inverse_result {
    bbgp::InverseResult value;
};
struct bbgp_sampler {
    bbgp::PriorSampler value;
};
struct bbgp_convergence_report {
    bbgp::ConvergenceReport value;
};
struct bbgp_model_error_report {
    bbgp::ModelErrorReport value;
};

namespace {

thread_local std::string last_error;

template <class F>
bbgp_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return BBGP_OK;
    } catch (const bbgp::InvalidArgument& e) {
        last_error = e.what();
        return BBGP_ERR_INVALID_ARGUMENT;
    } catch (const bbgp::NumericalError& e) {
        last_error = e.what();
        return BBGP_ERR_NUMERICAL;
    } catch (const bbgp::ResourceLimit& e) {
        last_error = e.what();
        return BBGP_ERR_RESOURCE;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return BBGP_ERR_RESOURCE;
    } catch (const std::exception& e) {
        last_error = e.what();
        return BBGP_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return BBGP_ERR_INTERNAL;
    }
}

template <class T>
const T& deref(const T* p, const char* what) {
    if (p == nullptr) throw bbgp::InvalidArgument(std::string(what) + " is NULL");
    return *p;
}

template <class T>
void check_out(T* p) {
    if (p == nullptr) throw bbgp::InvalidArgument("output pointer is NULL");
}

void check_array(const void* p, std::size_t n, const char* what) {
    if (p == nullptr && n > 0) throw bbgp::InvalidArgument(std::string(what) + " is NULL");
}

bbgp::PointList points_of(const double* data, std::size_t n, int dim) {
    check_array(data, n, "points");
    bbgp::PointList out(n, bbgp::Point(static_cast<std::size_t>(dim)));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < dim; ++k) out[i][static_cast<std::size_t>(k)] = data[i * static_cast<std::size_t>(dim) + k];
    return out;
}

Eigen::VectorXd vector_of(const double* data, std::size_t n, const char* what) {
    check_array(data, n, what);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = data[i];
    return v;
}

bbgp::PdeSolution prior_of(const bbgp_kernel* kernel, const bbgp_field* mean) {
    const auto& spec = deref(kernel, "kernel").spec;
    return bbgp::PdeSolution{deref(mean, "prior mean").value, spec.family, spec.omega};
}

bbgp::HyperPrior hyper_of(bbgp_hyper_prior h) {
    switch (h.kind) {
        case BBGP_PRIOR_FLAT: return bbgp::HyperPrior::flat();
        case BBGP_PRIOR_JEFFREYS: return bbgp::HyperPrior::jeffreys();
        case BBGP_PRIOR_FIXED: return bbgp::HyperPrior::fixed(h.beta0);
    }
    throw bbgp::InvalidArgument("unknown hyperprior kind");
}

bbgp_beta_estimate estimate_of(const bbgp::BetaEstimate& e) {
    const int boundary = e.boundary == bbgp::BracketBoundary::Upper   ? 1
                         : e.boundary == bbgp::BracketBoundary::Lower ? -1
                                                                      : 0;
    return bbgp_beta_estimate{e.beta, e.objective, boundary, e.dirac_limit() ? 1 : 0};
}

bbgp::Dataset dataset_of(const bbgp_kernel* kernel, const double* X, std::size_t n, const double* y, double sigma2) {
    const int dim = deref(kernel, "kernel").spec.dim;
    return bbgp::Dataset::create(points_of(X, n, dim), vector_of(y, n, "observations"), sigma2);
}

std::vector<bbgp::SourceModel> basis_of(const bbgp_source* const* basis, std::size_t n) {
    check_array(basis, n, "source basis");
    std::vector<bbgp::SourceModel> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(deref(basis[i], "basis source").value);
    return out;
}

void write(const Eigen::VectorXd& v, double* out) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v(i);
}

std::mutex log_mutex;
bbgp_log_fn log_fn = nullptr;
void* log_user = nullptr;

}  // namespace

extern "C" {

const char* bbgp_version(void) { return "0.1.0"; }

const char* bbgp_status_string(bbgp_status status) {
    switch (status) {
        case BBGP_OK: return "ok";
        case BBGP_ERR_INVALID_ARGUMENT: return "invalid argument";
        case BBGP_ERR_NUMERICAL: return "numerical failure";
        case BBGP_ERR_RESOURCE: return "resource limit";
        case BBGP_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* bbgp_last_error(void) { return last_error.c_str(); }

void bbgp_set_log_callback(bbgp_log_fn fn, void* user) {
    {
        const std::lock_guard<std::mutex> lock(log_mutex);
        log_fn = fn;
        log_user = user;
    }
    if (fn == nullptr) {
        bbgp::set_log_sink({});
        return;
    }
    bbgp::set_log_sink([](bbgp::LogLevel level, std::string_view message) {
        const std::lock_guard<std::mutex> lock(log_mutex);
        if (log_fn == nullptr) return;
        const std::string text(message);
        log_fn(level == bbgp::LogLevel::Warning ? BBGP_LOG_WARNING : BBGP_LOG_INFO, text.c_str(), log_user);
    });
}

// ---- kernels ---------------------------------------------------------------

bbgp_status bbgp_kernel_create(bbgp_kernel_family family, int dim, int order, double beta, double param,
                               bbgp_kernel** out) {
    return guarded([&] {
        check_out(out);
        bbgp::KernelSpec spec;
        switch (family) {
            case BBGP_KERNEL_BRIDGE: spec = bbgp::KernelSpec::bridge(dim, beta, order); break;
            case BBGP_KERNEL_HELMHOLTZ:
                bbgp::require(dim == 1, "the helmholtz kernel is only defined for d = 1");
                spec = bbgp::KernelSpec::helmholtz(param, beta, order);
                break;
            case BBGP_KERNEL_POWER:
                bbgp::require(dim == 1, "the power kernel is only defined for d = 1");
                spec = bbgp::KernelSpec::power(param, beta, order);
                break;
            default: throw bbgp::InvalidArgument("unknown kernel family");
        }
        spec.validate();
        *out = new bbgp_kernel{spec};
    });
}

void bbgp_kernel_destroy(bbgp_kernel* kernel) { delete kernel; }

bbgp_status bbgp_kernel_info(const bbgp_kernel* kernel, int* dim, int* order, double* beta) {
    return guarded([&] {
        const auto& s = deref(kernel, "kernel").spec;
        if (dim) *dim = s.dim;
        if (order) *order = s.order;
        if (beta) *beta = s.beta;
    });
}

bbgp_status bbgp_kernel_eval(const bbgp_kernel* kernel, const double* x, const double* xp, double* out) {
    return guarded([&] {
        const auto& s = deref(kernel, "kernel").spec;
        check_out(out);
        check_array(x, 1, "x");
        check_array(xp, 1, "x'");
        const auto d = static_cast<std::size_t>(s.dim);
        *out = bbgp::kernel_eval(s, std::span<const double>(x, d), std::span<const double>(xp, d));
    });
}

bbgp_status bbgp_kernel_eigenvalues(const bbgp_kernel* kernel, double* out, size_t capacity) {
    return guarded([&] {
        const Eigen::VectorXd lambda = bbgp::eigenvalues(deref(kernel, "kernel").spec);
        check_out(out);
        bbgp::require(capacity >= static_cast<std::size_t>(lambda.size()), "output buffer too small");
        write(lambda, out);
    });
}

bbgp_status bbgp_kernel_rkhs_sq_norm(const bbgp_kernel* kernel, const bbgp_field* u, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::rkhs_sq_norm(deref(kernel, "kernel").spec, deref(u, "field").value);
    });
}

// ---- fields and sources ----------------------------------------------------

bbgp_status bbgp_field_create(int dim, int order, const double* coeffs, bbgp_field** out) {
    return guarded([&] {
        check_out(out);
        const std::size_t count = bbgp::coefficient_count(dim, order);
        if (coeffs == nullptr) {
            *out = new bbgp_field{bbgp::SpectralField(dim, order)};
        } else {
            *out = new bbgp_field{bbgp::SpectralField(dim, order, vector_of(coeffs, count, "coefficients"))};
        }
    });
}

void bbgp_field_destroy(bbgp_field* field) { delete field; }

bbgp_status bbgp_field_size(const bbgp_field* field, int* dim, int* order, size_t* count) {
    return guarded([&] {
        const auto& f = deref(field, "field").value;
        if (dim) *dim = f.dim();
        if (order) *order = f.order();
        if (count) *count = static_cast<std::size_t>(f.coeffs().size());
    });
}

bbgp_status bbgp_field_coefficients(const bbgp_field* field, double* out, size_t capacity) {
    return guarded([&] {
        const auto& f = deref(field, "field").value;
        check_out(out);
        bbgp::require(capacity >= static_cast<std::size_t>(f.coeffs().size()), "output buffer too small");
        write(f.coeffs(), out);
    });
}

bbgp_status bbgp_field_eval(const bbgp_field* field, const double* points, size_t npoints, double* out) {
    return guarded([&] {
        const auto& f = deref(field, "field").value;
        check_array(out, npoints, "output");
        const auto pts = points_of(points, npoints, f.dim());
        for (std::size_t i = 0; i < npoints; ++i) out[i] = f(pts[i]);
    });
}

bbgp_status bbgp_field_l2_norm(const bbgp_field* field, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::l2_norm(deref(field, "field").value);
    });
}

bbgp_status bbgp_field_project(const bbgp_source* f, int order, bbgp_field** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_field{deref(f, "source").value.coefficients(order)};
    });
}

bbgp_status bbgp_source_from_expression(const char* text, int dim, const double* theta, size_t ntheta,
                                        bbgp_source** out) {
    return guarded([&] {
        check_out(out);
        bbgp::require(text != nullptr, "expression text is NULL");
        check_array(theta, ntheta, "theta");
        std::vector<double> t(theta, theta + ntheta);
        bbgp::Expression expr = bbgp::Expression::parse(text, dim);
        if (t.empty()) t.assign(static_cast<std::size_t>(expr.parameter_count()), 0.0);
        *out = new bbgp_source{bbgp::SourceModel::closed_form(std::move(expr), std::move(t))};
    });
}

bbgp_status bbgp_source_from_field(const bbgp_field* coeffs, bbgp_source** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_source{bbgp::SourceModel::spectral(deref(coeffs, "field").value)};
    });
}

void bbgp_source_destroy(bbgp_source* source) { delete source; }

bbgp_status bbgp_source_parameter_count(const bbgp_source* source, int* out) {
    return guarded([&] {
        check_out(out);
        *out = deref(source, "source").value.parameter_count();
    });
}

bbgp_status bbgp_source_eval(const bbgp_source* source, const double* points, size_t npoints, double* out) {
    return guarded([&] {
        const auto& q = deref(source, "source").value;
        check_array(out, npoints, "output");
        const auto pts = points_of(points, npoints, q.dim());
        for (std::size_t i = 0; i < npoints; ++i) out[i] = q(pts[i]);
    });
}

// ---- PDE -------------------------------------------------------------------

bbgp_status bbgp_solve(const bbgp_source* q, const bbgp_kernel* kernel, bbgp_field** u0) {
    return guarded([&] {
        check_out(u0);
        *u0 = new bbgp_field{bbgp::solve(deref(q, "source").value, deref(kernel, "kernel").spec).u0};
    });
}

bbgp_status bbgp_energy(const bbgp_field* u, const bbgp_source* q, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::energy(deref(u, "field").value, deref(q, "source").value);
    });
}

bbgp_status bbgp_energy_rkhs_shift(const bbgp_field* u, const bbgp_source* q, const bbgp_kernel* kernel, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::energy_rkhs_shift(deref(u, "field").value, deref(q, "source").value, deref(kernel, "kernel").spec);
    });
}

bbgp_status bbgp_half_source_energy(const bbgp_source* q, const bbgp_kernel* kernel, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::half_source_energy(deref(q, "source").value, deref(kernel, "kernel").spec);
    });
}

// ---- regression ------------------------------------------------------------

bbgp_status bbgp_condition(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X, size_t n,
                           const double* y, double sigma2, bbgp_posterior** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_posterior{bbgp::condition(deref(kernel, "kernel").spec, prior_of(kernel, prior_mean),
                                                  dataset_of(kernel, X, n, y, sigma2))};
    });
}

void bbgp_posterior_destroy(bbgp_posterior* posterior) { delete posterior; }

bbgp_status bbgp_posterior_mean(const bbgp_posterior* posterior, const double* points, size_t npoints, double* out) {
    return guarded([&] {
        const auto& p = deref(posterior, "posterior").value;
        check_array(out, npoints, "output");
        write(p.mean(points_of(points, npoints, p.spec().dim)), out);
    });
}

bbgp_status bbgp_posterior_variance(const bbgp_posterior* posterior, const double* points, size_t npoints,
                                    double* out) {
    return guarded([&] {
        const auto& p = deref(posterior, "posterior").value;
        check_array(out, npoints, "output");
        write(p.variance(points_of(points, npoints, p.spec().dim)), out);
    });
}

bbgp_status bbgp_posterior_eta(const bbgp_posterior* posterior, double* out) {
    return guarded([&] {
        check_out(out);
        *out = deref(posterior, "posterior").value.eta();
    });
}

bbgp_status bbgp_krr(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X, size_t n,
                     const double* y, double eta, const double* points, size_t npoints, double* out) {
    return guarded([&] {
        const bbgp::PdeSolution prior = prior_of(kernel, prior_mean);
        const bbgp::KrrSolution krr =
            bbgp::krr_solve(deref(kernel, "kernel").spec, prior, dataset_of(kernel, X, n, y, bbgp::kNoiseFloor), eta);
        check_array(out, npoints, "output");
        const auto pts = points_of(points, npoints, deref(kernel, "kernel").spec.dim);
        for (std::size_t i = 0; i < npoints; ++i) out[i] = krr(pts[i]);
    });
}

bbgp_status bbgp_log_marginal_points(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X,
                                     size_t n, const double* y, double sigma2, double beta, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::log_marginal(deref(kernel, "kernel").spec, prior_of(kernel, prior_mean),
                                  dataset_of(kernel, X, n, y, sigma2), beta);
    });
}

bbgp_status bbgp_log_marginal_coefficients(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* d,
                                           size_t m, double sigma2, double beta, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::log_marginal(deref(kernel, "kernel").spec, prior_of(kernel, prior_mean),
                                  bbgp::CoefficientData::create(vector_of(d, m, "coefficients"), sigma2), beta);
    });
}

bbgp_status bbgp_beta_gradient(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* d, size_t m,
                               double sigma2, double beta, bbgp_hyper_prior hyper, double* out) {
    return guarded([&] {
        check_out(out);
        *out = bbgp::beta_gradient(deref(kernel, "kernel").spec, prior_of(kernel, prior_mean),
                                   bbgp::CoefficientData::create(vector_of(d, m, "coefficients"), sigma2), beta,
                                   hyper_of(hyper));
    });
}

bbgp_status bbgp_beta_map_coefficients(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* d,
                                       size_t m, double sigma2, bbgp_hyper_prior hyper, bbgp_beta_estimate* out) {
    return guarded([&] {
        check_out(out);
        *out = estimate_of(bbgp::beta_map(deref(kernel, "kernel").spec, prior_of(kernel, prior_mean),
                                          bbgp::CoefficientData::create(vector_of(d, m, "coefficients"), sigma2),
                                          hyper_of(hyper)));
    });
}

bbgp_status bbgp_beta_map_points(const bbgp_kernel* kernel, const bbgp_field* prior_mean, const double* X, size_t n,
                                 const double* y, double sigma2, bbgp_hyper_prior hyper, bbgp_beta_estimate* out) {
    return guarded([&] {
        check_out(out);
        *out = estimate_of(bbgp::beta_map(deref(kernel, "kernel").spec, prior_of(kernel, prior_mean),
                                          dataset_of(kernel, X, n, y, sigma2), hyper_of(hyper)));
    });
}

// ---- inversion -------------------------------------------------------------

bbgp_status bbgp_invert_linear_coefficients(const bbgp_source* const* basis, size_t nbasis, const double* d, size_t m,
                                            double sigma2, bbgp_hyper_prior hyper, const bbgp_kernel* kernel,
                                            bbgp_inverse_result** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_inverse_result{bbgp::invert_source(
            basis_of(basis, nbasis), bbgp::CoefficientData::create(vector_of(d, m, "coefficients"), sigma2),
            hyper_of(hyper), deref(kernel, "kernel").spec)};
    });
}

bbgp_status bbgp_invert_linear_points(const bbgp_source* const* basis, size_t nbasis, const double* X, size_t n,
                                      const double* y, double sigma2, bbgp_hyper_prior hyper,
                                      const bbgp_kernel* kernel, bbgp_inverse_result** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_inverse_result{bbgp::invert_source(basis_of(basis, nbasis), dataset_of(kernel, X, n, y, sigma2),
                                                           hyper_of(hyper), deref(kernel, "kernel").spec)};
    });
}

bbgp_status bbgp_invert_nonlinear_coefficients(const bbgp_source* family, const double* theta0, size_t ntheta,
                                               const double* d, size_t m, double sigma2, bbgp_hyper_prior hyper,
                                               const bbgp_kernel* kernel, bbgp_inverse_result** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_inverse_result{bbgp::invert_source(
            deref(family, "source family").value, vector_of(theta0, ntheta, "theta0"),
            bbgp::CoefficientData::create(vector_of(d, m, "coefficients"), sigma2), hyper_of(hyper),
            deref(kernel, "kernel").spec)};
    });
}

bbgp_status bbgp_invert_nonlinear_points(const bbgp_source* family, const double* theta0, size_t ntheta,
                                         const double* X, size_t n, const double* y, double sigma2,
                                         bbgp_hyper_prior hyper, const bbgp_kernel* kernel,
                                         bbgp_inverse_result** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_inverse_result{bbgp::invert_source(deref(family, "source family").value,
                                                           vector_of(theta0, ntheta, "theta0"),
                                                           dataset_of(kernel, X, n, y, sigma2), hyper_of(hyper),
                                                           deref(kernel, "kernel").spec)};
    });
}

void bbgp_inverse_result_destroy(bbgp_inverse_result* result) { delete result; }

bbgp_status bbgp_inverse_result_size(const bbgp_inverse_result* result, size_t* ntheta) {
    return guarded([&] {
        check_out(ntheta);
        *ntheta = static_cast<std::size_t>(deref(result, "result").value.theta_mean.size());
    });
}

bbgp_status bbgp_inverse_result_theta(const bbgp_inverse_result* result, double* mean, double* cov) {
    return guarded([&] {
        const auto& r = deref(result, "result").value;
        if (mean) write(r.theta_mean, mean);
        if (cov) {
            const Eigen::Index m = r.theta_cov.rows();
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j) cov[i * m + j] = r.theta_cov(i, j);
        }
    });
}

bbgp_status bbgp_inverse_result_beta(const bbgp_inverse_result* result, bbgp_beta_estimate* out) {
    return guarded([&] {
        check_out(out);
        *out = estimate_of(deref(result, "result").value.beta);
    });
}

bbgp_status bbgp_inverse_result_flags(const bbgp_inverse_result* result, size_t* flat_directions, int* laplace,
                                      int* converged) {
    return guarded([&] {
        const auto& r = deref(result, "result").value;
        if (flat_directions) *flat_directions = r.flat_directions.size();
        if (laplace) *laplace = r.laplace ? 1 : 0;
        if (converged) *converged = r.converged ? 1 : 0;
    });
}

// ---- nonlinear MAP ---------------------------------------------------------

bbgp_status bbgp_map_nonlinear(bbgp_map_fn map, bbgp_map_fn jacobian, void* user, const double* gamma, const double* y,
                               size_t nobs, const bbgp_source* q, const bbgp_kernel* kernel, const bbgp_field* init,
                               double gradient_tol, int max_iterations, bbgp_field** out, bbgp_map_report* report) {
    return guarded([&] {
        check_out(out);
        bbgp::require(map != nullptr && jacobian != nullptr, "map and Jacobian callbacks are required");
        const auto& spec = deref(kernel, "kernel").spec;
        const auto call = [&](bbgp_map_fn fn, const Eigen::VectorXd& c, double* dst, const char* what) {
            if (fn(c.data(), static_cast<std::size_t>(c.size()), dst, nobs, user) != 0)
                throw bbgp::NumericalError(std::string(what) + " callback reported failure");
        };
        bbgp::MeasurementOperator::Map m = [=](const Eigen::VectorXd& c) {
            Eigen::VectorXd r(static_cast<Eigen::Index>(nobs));
            call(map, c, r.data(), "measurement");
            return r;
        };
        bbgp::MeasurementOperator::Jacobian j = [=](const Eigen::VectorXd& c) {
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r(static_cast<Eigen::Index>(nobs),
                                                                                      c.size());
            call(jacobian, c, r.data(), "Jacobian");
            return Eigen::MatrixXd(r);
        };
        const auto obs = bbgp::MeasurementOperator::custom(m, j, spec.dim, spec.order, vector_of(gamma, nobs, "gamma"));
        bbgp::MapOptions options;
        if (gradient_tol > 0.0) options.gradient_tol = gradient_tol;
        if (max_iterations > 0) options.max_iterations = max_iterations;
        const bbgp::MapResult r = bbgp::map_nonlinear(obs, vector_of(y, nobs, "observations"), deref(q, "source").value,
                                                      spec, deref(init, "initial field").value, options);
        if (report) *report = bbgp_map_report{r.objective, r.gradient_norm, r.iterations, r.converged ? 1 : 0};
        *out = new bbgp_field{r.u};
    });
}

// ---- sampling --------------------------------------------------------------

bbgp_status bbgp_sampler_create(const bbgp_kernel* kernel, const bbgp_field* mean, size_t mesh_size, uint64_t seed,
                                bbgp_sampler** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_sampler{bbgp::PriorSampler(deref(kernel, "kernel").spec, deref(mean, "mean").value,
                                                   static_cast<Eigen::Index>(mesh_size), seed)};
    });
}

bbgp_status bbgp_sampler_create_power(double p, int order, size_t mesh_size, uint64_t seed, bbgp_sampler** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_sampler{bbgp::PriorSampler::power_version(p, order, static_cast<Eigen::Index>(mesh_size), seed)};
    });
}

void bbgp_sampler_destroy(bbgp_sampler* sampler) { delete sampler; }

bbgp_status bbgp_sampler_draw(const bbgp_sampler* sampler, uint64_t index, bbgp_field** out) {
    return guarded([&] {
        check_out(out);
        *out = new bbgp_field{deref(sampler, "sampler").value.draw(index)};
    });
}

bbgp_status bbgp_sampler_sample_at(const bbgp_sampler* sampler, const double* points, size_t npoints, size_t count,
                                   uint64_t first, double* out) {
    return guarded([&] {
        const auto& s = deref(sampler, "sampler").value;
        check_array(out, npoints * count, "output");
        const Eigen::MatrixXd v = s.sample_at(points_of(points, npoints, s.spec().dim), count, first);
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            for (Eigen::Index j = 0; j < v.cols(); ++j) out[i * v.cols() + j] = v(i, j);
    });
}

bbgp_status bbgp_nested_consistency(const bbgp_sampler* small, const bbgp_sampler* large, size_t draws,
                                    bbgp_nested_report* out) {
    return guarded([&] {
        check_out(out);
        const auto r = bbgp::nested_consistency(deref(small, "small sampler").value, deref(large, "large sampler").value,
                                                draws);
        *out = bbgp_nested_report{r.analytic_equal ? 1 : 0, r.analytic_max_diff, r.mc_max_deviation, r.mc_tolerance,
                                  r.draws, r.passed() ? 1 : 0};
    });
}

// ---- design metrics and studies --------------------------------------------

bbgp_status bbgp_design_metrics_compute(const double* points, size_t npoints, int dim, bbgp_design_metrics* out) {
    return guarded([&] {
        check_out(out);
        bbgp::require(dim >= 1 && dim <= bbgp::kMaxDim, "dimension must be 1, 2 or 3");
        const auto m = bbgp::design_metrics(points_of(points, npoints, dim));
        *out = bbgp_design_metrics{m.fill, m.separation, m.mesh_ratio};
    });
}

bbgp_status bbgp_fit_loglog_slope(const double* x, const double* y, size_t n, bbgp_slope_fit* out) {
    return guarded([&] {
        check_out(out);
        check_array(x, n, "x");
        check_array(y, n, "y");
        const auto f = bbgp::fit_loglog_slope(std::vector<double>(x, x + n), std::vector<double>(y, y + n));
        *out = bbgp_slope_fit{f.slope, f.intercept, f.half_width};
    });
}

bbgp_convergence_options bbgp_convergence_default_options(void) {
    const bbgp::ConvergenceOptions o;
    return bbgp_convergence_options{o.sigma2, o.noisy ? 1 : 0, o.nodes_per_interval};
}

bbgp_status bbgp_convergence_study(bbgp_scalar_fn truth, void* user, const bbgp_source* q_assumed,
                                   const bbgp_kernel* kernel, const int* ns, size_t count, uint64_t seed,
                                   const bbgp_convergence_options* options, bbgp_convergence_report** out) {
    return guarded([&] {
        check_out(out);
        bbgp::require(truth != nullptr, "truth callback is NULL");
        check_array(ns, count, "sweep");
        bbgp::ConvergenceOptions o;
        if (options) {
            o.sigma2 = options->sigma2;
            o.noisy = options->noisy != 0;
            o.nodes_per_interval = options->nodes_per_interval;
        }
        const bbgp::ScalarFunction f = [&](std::span<const double> x) {
            return truth(x.data(), static_cast<int>(x.size()), user);
        };
        *out = new bbgp_convergence_report{bbgp::convergence_study(f, deref(q_assumed, "source").value,
                                                                   deref(kernel, "kernel").spec,
                                                                   std::vector<int>(ns, ns + count), seed, o)};
    });
}

void bbgp_convergence_report_destroy(bbgp_convergence_report* report) { delete report; }

bbgp_status bbgp_convergence_report_rows(const bbgp_convergence_report* report, size_t* count) {
    return guarded([&] {
        check_out(count);
        *count = deref(report, "report").value.rows.size();
    });
}

bbgp_status bbgp_convergence_report_row(const bbgp_convergence_report* report, size_t index,
                                        bbgp_convergence_row* out) {
    return guarded([&] {
        check_out(out);
        const auto& rows = deref(report, "report").value.rows;
        bbgp::require(index < rows.size(), "row index out of range");
        const auto& r = rows[index];
        *out = bbgp_convergence_row{r.n, r.fill, r.l2_error, r.variance_norm};
    });
}

bbgp_status bbgp_convergence_report_slopes(const bbgp_convergence_report* report, bbgp_slope_fit* error,
                                           bbgp_slope_fit* variance) {
    return guarded([&] {
        const auto& r = deref(report, "report").value;
        if (error) *error = bbgp_slope_fit{r.error_slope.slope, r.error_slope.intercept, r.error_slope.half_width};
        if (variance)
            *variance = bbgp_slope_fit{r.variance_slope.slope, r.variance_slope.intercept, r.variance_slope.half_width};
    });
}

bbgp_model_error_options bbgp_model_error_default_options(void) {
    const bbgp::ModelErrorOptions o;
    return bbgp_model_error_options{static_cast<std::size_t>(o.observed), o.sigma2, o.noisy ? 1 : 0,
                                    bbgp_hyper_prior{BBGP_PRIOR_FLAT, 1.0}, nullptr, 0};
}

bbgp_status bbgp_model_error_study(const bbgp_source* q, const bbgp_kernel* kernel, const bbgp_field* perturbation,
                                   const double* epsilons, size_t count, uint64_t seed,
                                   const bbgp_model_error_options* options, bbgp_model_error_report** out) {
    return guarded([&] {
        check_out(out);
        check_array(epsilons, count, "epsilons");
        bbgp::ModelErrorOptions o;
        if (options) {
            o.observed = static_cast<Eigen::Index>(options->observed);
            o.sigma2 = options->sigma2;
            o.noisy = options->noisy != 0;
            o.hyper = hyper_of(options->hyper);
            o.theta_basis = basis_of(options->theta_basis, options->theta_basis_count);
        }
        *out = new bbgp_model_error_report{bbgp::model_error_study(
            deref(q, "source").value, deref(kernel, "kernel").spec, deref(perturbation, "perturbation").value,
            std::vector<double>(epsilons, epsilons + count), seed, o)};
    });
}

void bbgp_model_error_report_destroy(bbgp_model_error_report* report) { delete report; }

bbgp_status bbgp_model_error_report_rows(const bbgp_model_error_report* report, size_t* count) {
    return guarded([&] {
        check_out(count);
        *count = deref(report, "report").value.rows.size();
    });
}

bbgp_status bbgp_model_error_report_row(const bbgp_model_error_report* report, size_t index,
                                        bbgp_model_error_row* out) {
    return guarded([&] {
        check_out(out);
        const auto& rows = deref(report, "report").value.rows;
        bbgp::require(index < rows.size(), "row index out of range");
        const auto& r = rows[index];
        const double nan = std::nan("");
        *out = bbgp_model_error_row{r.epsilon,
                                    estimate_of(r.beta),
                                    r.beta_formula ? 1 : 0,
                                    r.beta_formula.value_or(nan),
                                    r.ratio.value_or(nan),
                                    r.jeffreys_ratio ? 1 : 0,
                                    r.jeffreys_ratio.value_or(nan),
                                    r.theta_cov_trace ? 1 : 0,
                                    r.theta_cov_trace.value_or(nan)};
    });
}

}  // extern "C"
