#include "core/harness.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bbgp {
namespace {

// ||u* - u0||^2_{H_k} restricted to the first m coefficients.
double beta_limit_denominator(const KernelSpec& spec, const SpectralField& truth, const SpectralField& u0,
                              Eigen::Index m) {
    const Eigen::VectorXd diff = (truth.coeffs() - u0.coeffs()).head(m);
    return diff.cwiseAbs2().cwiseQuotient(eigenvalues(spec).head(m)).sum();
}

}  // namespace

int fill_grid_points_per_axis(int dim) {
    require(dim >= 1 && dim <= kMaxDim, "dimension must be 1, 2 or 3");
    return static_cast<int>(std::lround(std::pow(1e4, 1.0 / dim))) + 1;
}

DesignMetrics design_metrics(const PointList& X) {
    require(X.size() >= 2, "design metrics need at least two points");
    const int dim = static_cast<int>(X.front().size());
    for (const auto& x : X) {
        require(static_cast<int>(x.size()) == dim, "points must share one dimension");
        check_in_cube(x, dim);
    }
    const auto dist2 = [dim](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        return s;
    };

    double min_pair = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t j = i + 1; j < X.size(); ++j) min_pair = std::min(min_pair, dist2(X[i], X[j]));

    const int g = fill_grid_points_per_axis(dim);
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(g);
    double fill2 = 0.0;
    Point z(static_cast<std::size_t>(dim));
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        for (int k = dim - 1; k >= 0; --k) {
            z[static_cast<std::size_t>(k)] = static_cast<double>(rest % g) / (g - 1);
            rest /= g;
        }
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& x : X) nearest = std::min(nearest, dist2(z, x));
        fill2 = std::max(fill2, nearest);
    }

    DesignMetrics out;
    out.fill = std::sqrt(fill2);
    out.separation = 0.5 * std::sqrt(min_pair);
    if (!(out.separation > 0.0)) throw InvalidArgument("design contains repeated points");
    out.mesh_ratio = out.fill / out.separation;
    return out;
}

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two matching points");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        const double yi = y[static_cast<std::size_t>(i)];
        if (!(xi > 0.0) || !(yi > 0.0) || !std::isfinite(xi) || !std::isfinite(yi))
            throw NumericalError("log-log fit needs positive finite values");
        A(i, 0) = std::log(xi);
        A(i, 1) = 1.0;
        b(i) = std::log(yi);
    }
    const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
    SlopeFit fit{coef(0), coef(1), 0.0};
    if (n > 2) {
        const double rss = (A * coef - b).squaredNorm();
        const double mean = A.col(0).mean();
        const double sxx = (A.col(0).array() - mean).square().sum();
        const double se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
        const boost::math::students_t dist(static_cast<double>(n - 2));
        fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    }
    return fit;
}

ConvergenceReport convergence_study(const ScalarFunction& truth, const SourceModel& q_assumed, const KernelSpec& spec,
                                    const std::vector<int>& ns, std::uint64_t seed,
                                    const ConvergenceOptions& options) {
    require(spec.dim == 1, "convergence study is one-dimensional");
    require(!ns.empty(), "sweep must not be empty");
    require(options.nodes_per_interval >= 1, "nodes per interval must be >= 1");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        require(ns[i] >= 2, "grid sizes must be >= 2");
        require(i == 0 || ns[i] > ns[i - 1], "sweep must be increasing");
    }
    spec.validate();
    const PdeSolution prior = solve(q_assumed, spec);
    const QuadratureRule ref = QuadratureRule::gauss_legendre(1, options.nodes_per_interval);

    ConvergenceReport report;
    for (std::size_t s = 0; s < ns.size(); ++s) {
        const int n = ns[s];
        PointList X;
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(i + 1) / (n + 1);
            X.push_back({x});
            y(i) = truth(X.back());
            if (!std::isfinite(y(i))) throw NumericalError("truth is not finite on the design");
            if (options.noisy) y(i) += std::sqrt(options.sigma2) * random::normal(seed, s, static_cast<std::uint64_t>(i));
        }
        const PosteriorModel post = condition(spec, prior, Dataset::create(X, y, options.sigma2));

        // Composite rule on [0, x_1], ..., [x_n, 1]; the posterior is smooth between sites.
        PointList nodes;
        std::vector<double> weights;
        for (int k = 0; k <= n; ++k) {
            const double a = static_cast<double>(k) / (n + 1);
            const double b = static_cast<double>(k + 1) / (n + 1);
            for (std::size_t j = 0; j < ref.size(); ++j) {
                nodes.push_back({a + (b - a) * ref.axis_nodes()[j]});
                weights.push_back((b - a) * ref.axis_weights()[j]);
            }
        }
        const Eigen::VectorXd mean = post.mean(nodes);
        const Eigen::VectorXd var = post.variance(nodes);
        double err2 = 0.0;
        double var_int = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double e = truth(nodes[j]) - mean(static_cast<Eigen::Index>(j));
            err2 += weights[j] * e * e;
            var_int += weights[j] * var(static_cast<Eigen::Index>(j));
        }
        ConvergenceRow row{n, 0.5 / (n + 1), std::sqrt(err2), std::sqrt(var_int)};
        if (!std::isfinite(row.l2_error) || !std::isfinite(row.variance_norm))
            throw NumericalError("convergence metrics are not finite");
        report.rows.push_back(row);
    }

    std::vector<double> xs, err, var;
    for (const auto& r : report.rows) {
        xs.push_back(r.n);
        err.push_back(r.l2_error);
        var.push_back(r.variance_norm);
    }
    if (xs.size() >= 2) {
        report.error_slope = fit_loglog_slope(xs, err);
        report.variance_slope = fit_loglog_slope(xs, var);
    }
    return report;
}

ModelErrorReport model_error_study(const SourceModel& q, const KernelSpec& spec, const SpectralField& perturbation,
                                   const std::vector<double>& epsilons, std::uint64_t seed,
                                   const ModelErrorOptions& options) {
    spec.validate();
    require(!epsilons.empty(), "sweep must not be empty");
    require(perturbation.dim() == spec.dim && perturbation.order() == spec.order,
            "perturbation truncation does not match the kernel");
    const PdeSolution prior = solve(q, spec);
    const Eigen::Index m = options.observed;
    require(m >= 1 && m <= prior.u0.coeffs().size(), "observed coefficient count must lie in [1, S^d]");

    ModelErrorReport report;
    report.observed = m;
    for (std::size_t s = 0; s < epsilons.size(); ++s) {
        const double eps = epsilons[s];
        require(std::isfinite(eps), "model-error magnitudes must be finite");
        const SpectralField truth = prior.u0 + eps * perturbation;
        Eigen::VectorXd d = truth.coeffs().head(m);
        if (options.noisy)
            for (Eigen::Index k = 0; k < m; ++k)
                d(k) += std::sqrt(options.sigma2) * random::normal(seed, s, static_cast<std::uint64_t>(k));
        const CoefficientData data = CoefficientData::create(d, options.sigma2);

        ModelErrorRow row;
        row.epsilon = eps;
        row.beta = beta_map(spec, prior, data, options.hyper);
        const double dist = beta_limit_denominator(spec, truth, prior.u0, m);
        if (dist > 0.0 && !row.beta.dirac_limit()) {
            row.beta_formula = static_cast<double>(m) / dist;
            row.ratio = row.beta.beta / *row.beta_formula;
        }
        if (options.hyper.kind == HyperPriorKind::Flat && !row.beta.dirac_limit()) {
            const BetaEstimate jeff = beta_map(spec, prior, data, HyperPrior::jeffreys());
            row.jeffreys_ratio = jeff.beta / row.beta.beta;
        }
        if (!options.theta_basis.empty()) {
            const InverseResult inv =
                invert_source(options.theta_basis, data, HyperPrior::fixed(row.beta.beta), spec);
            row.theta_cov_trace = inv.theta_cov.trace();
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace bbgp
