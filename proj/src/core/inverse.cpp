#include "core/inverse.hpp"

#include "core/error.hpp"

#include <cmath>
#include <sstream>

namespace bbgp {
namespace {

struct ThetaPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    std::vector<Eigen::VectorXd> flat;
};

// Pseudo-inverse Gaussian from precision P and information vector b.
ThetaPosterior from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& info) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(precision);
    if (eig.info() != Eigen::Success) throw NumericalError("theta precision eigendecomposition failed");
    const Eigen::VectorXd mu = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(mu.cwiseAbs().maxCoeff(), 1e-300);
    const auto m = precision.rows();
    ThetaPosterior out{Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(m, m), {}};
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::VectorXd v = eig.eigenvectors().col(k);
        if (mu(k) <= cutoff) {
            out.flat.push_back(v);
            continue;
        }
        out.mean += (v.dot(info) / mu(k)) * v;
        out.cov += (v * v.transpose()) / mu(k);
    }
    return out;
}

class LinearInversion {
public:
    LinearInversion(DiagonalGaussianModel model, Eigen::MatrixXd design)
        : model_(std::move(model)), design_(model_.rotate(design)) {}

    ThetaPosterior posterior(double beta) const {
        const Eigen::VectorXd w = model_.variances(beta).cwiseInverse();
        const Eigen::MatrixXd weighted = w.asDiagonal() * design_;
        return from_precision(design_.transpose() * weighted, weighted.transpose() * model_.rotated_residual());
    }

    double profiled(double beta) const {
        const ThetaPosterior post = posterior(beta);
        return model_.log_density(beta, model_.rotated_residual() - design_ * post.mean);
    }

private:
    DiagonalGaussianModel model_;
    Eigen::MatrixXd design_;
};

InverseResult run_linear(const LinearInversion& inv, const HyperPrior& hyper) {
    InverseResult out;
    if (hyper.kind == HyperPriorKind::Fixed) {
        out.beta = BetaEstimate{hyper.beta0, inv.profiled(hyper.beta0), BracketBoundary::None};
    } else {
        const ScalarMaximum best = maximize_bracketed(
            [&](double log_beta) {
                const double beta = std::exp(log_beta);
                return inv.profiled(beta) + hyper.log_density(beta);
            },
            kLogBetaMin, kLogBetaMax, kLogBetaTol, 97);
        out.beta = BetaEstimate{std::exp(best.x), best.value, best.boundary};
    }
    ThetaPosterior post = inv.posterior(out.beta.beta);
    out.theta_mean = std::move(post.mean);
    out.theta_cov = std::move(post.cov);
    out.flat_directions = std::move(post.flat);
    if (!out.flat_directions.empty())
        log(LogLevel::Warning, std::to_string(out.flat_directions.size()) + " source parameter direction(s) are not identifiable");
    return out;
}

void check_basis(const std::vector<SourceModel>& basis, const KernelSpec& spec) {
    require(!basis.empty(), "source basis must be non-empty");
    for (const auto& q : basis) require(q.dim() == spec.dim, "source basis dimension does not match kernel");
}

Eigen::VectorXd evaluate_at(const SpectralField& u, const PointList& points) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) out(static_cast<Eigen::Index>(i)) = u(points[i]);
    return out;
}

// Forward map theta -> observations for a nonlinear family.
using Forward = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

InverseResult run_nonlinear(const DiagonalGaussianModel& model, const Forward& forward, const Eigen::VectorXd& observed,
                            const Eigen::VectorXd& theta0, const HyperPrior& hyper) {
    Eigen::VectorXd warm = theta0;
    auto fit = [&](double beta) {
        const Eigen::VectorXd scale = model.variances(beta).cwiseSqrt().cwiseInverse();
        auto residual = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
            return scale.cwiseProduct(model.rotate(Eigen::VectorXd(observed - forward(theta))));
        };
        auto jacobian = [&](const Eigen::VectorXd& theta) -> Eigen::MatrixXd {
            return finite_difference_jacobian(residual, theta);
        };
        return minimize_least_squares(residual, jacobian, warm, LeastSquaresOptions{1e-10, 200});
    };
    auto profiled = [&](double beta) {
        const LeastSquaresResult r = fit(beta);
        warm = r.x;
        const Eigen::VectorXd rotated = model.rotate(Eigen::VectorXd(observed - forward(r.x)));
        return model.log_density(beta, rotated);
    };

    InverseResult out;
    out.laplace = true;
    if (hyper.kind == HyperPriorKind::Fixed) {
        out.beta = BetaEstimate{hyper.beta0, 0.0, BracketBoundary::None};
        out.beta.objective = profiled(hyper.beta0);
    } else {
        const ScalarMaximum best = maximize_bracketed(
            [&](double log_beta) {
                const double beta = std::exp(log_beta);
                return profiled(beta) + hyper.log_density(beta);
            },
            kLogBetaMin, kLogBetaMax, kLogBetaTol, 49);
        out.beta = BetaEstimate{std::exp(best.x), best.value, best.boundary};
    }

    const double beta = out.beta.beta;
    const LeastSquaresResult r = fit(beta);
    out.converged = r.converged;
    const Eigen::VectorXd scale = model.variances(beta).cwiseSqrt().cwiseInverse();
    auto residual = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return scale.cwiseProduct(model.rotate(Eigen::VectorXd(observed - forward(theta))));
    };
    const Eigen::MatrixXd j = finite_difference_jacobian(residual, r.x);
    ThetaPosterior post = from_precision(j.transpose() * j, Eigen::VectorXd::Zero(r.x.size()));
    out.theta_mean = r.x;
    out.theta_cov = std::move(post.cov);
    out.flat_directions = std::move(post.flat);
    if (!out.converged) log(LogLevel::Warning, "source parameter fit did not converge");
    return out;
}

}  // namespace

InverseResult invert_source(const std::vector<SourceModel>& basis, const CoefficientData& data,
                            const HyperPrior& hyper, const KernelSpec& spec) {
    check_basis(basis, spec);
    const Eigen::Index m = data.size();
    Eigen::MatrixXd design(m, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j)
        design.col(static_cast<Eigen::Index>(j)) = solve(basis[j], spec).u0.coeffs().head(m);
    return run_linear(LinearInversion(DiagonalGaussianModel::coefficients(spec, data.d, data.sigma2), design), hyper);
}

InverseResult invert_source(const std::vector<SourceModel>& basis, const Dataset& data, const HyperPrior& hyper,
                            const KernelSpec& spec) {
    check_basis(basis, spec);
    Eigen::MatrixXd design(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j)
        design.col(static_cast<Eigen::Index>(j)) = evaluate_at(solve(basis[j], spec).u0, data.X);
    return run_linear(LinearInversion(DiagonalGaussianModel::points(spec, data.X, data.y, data.sigma2), design), hyper);
}

InverseResult invert_source(const SourceModel& family, const Eigen::VectorXd& theta0, const CoefficientData& data,
                            const HyperPrior& hyper, const KernelSpec& spec) {
    require(family.parameter_count() >= 1 && theta0.size() == family.parameter_count(),
            "initial theta must match the source parameter count");
    const Eigen::Index m = data.size();
    Forward forward = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        const SourceModel q = family.with_theta(std::vector<double>(theta.data(), theta.data() + theta.size()));
        return solve(q, spec).u0.coeffs().head(m);
    };
    return run_nonlinear(DiagonalGaussianModel::coefficients(spec, data.d, data.sigma2), forward, data.d, theta0, hyper);
}

InverseResult invert_source(const SourceModel& family, const Eigen::VectorXd& theta0, const Dataset& data,
                            const HyperPrior& hyper, const KernelSpec& spec) {
    require(family.parameter_count() >= 1 && theta0.size() == family.parameter_count(),
            "initial theta must match the source parameter count");
    Forward forward = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        const SourceModel q = family.with_theta(std::vector<double>(theta.data(), theta.data() + theta.size()));
        return evaluate_at(solve(q, spec).u0, data.X);
    };
    return run_nonlinear(DiagonalGaussianModel::points(spec, data.X, data.y, data.sigma2), forward, data.y, theta0,
                         hyper);
}

// ---------------------------------------------------------------------------

double onsager_machlup(const MeasurementOperator& obs, const Eigen::VectorXd& y, const SourceModel& q,
                       const KernelSpec& spec, const SpectralField& u) {
    require(u.dim() == spec.dim && u.order() == spec.order, "field truncation does not match the kernel");
    require(y.size() == obs.observation_count(), "observation vector size does not match the operator");
    const SpectralField shift = u - solve(q, spec).u0;
    const Eigen::VectorXd misfit = y - obs.apply(u.coeffs());
    return 0.5 * misfit.cwiseAbs2().cwiseQuotient(obs.gamma()).sum() + 0.5 * spec.beta * rkhs_sq_norm(spec, shift);
}

MapResult map_nonlinear(const MeasurementOperator& obs, const Eigen::VectorXd& y, const SourceModel& q,
                        const KernelSpec& spec, const SpectralField& init, const MapOptions& options) {
    spec.validate();
    require(spec.dim == 1, "map_nonlinear is restricted to d = 1");
    require(obs.dim() == spec.dim && obs.order() == spec.order, "operator truncation does not match the kernel");
    require(init.dim() == spec.dim && init.order() == spec.order, "initial field truncation does not match the kernel");
    require(y.size() == obs.observation_count(), "observation vector size does not match the operator");

    const Eigen::VectorXd c0 = solve(q, spec).u0.coeffs();
    const Eigen::VectorXd scale = (eigenvalues(spec) / spec.beta).cwiseSqrt();
    const Eigen::VectorXd inv_noise = obs.gamma().cwiseSqrt().cwiseInverse();
    const Eigen::Index n = y.size();
    const Eigen::Index s = c0.size();

    // whitened coordinates: c = c0 + scale .* z, prior term 1/2 |z|^2
    auto coeffs_of = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return c0 + scale.cwiseProduct(z); };
    auto residual = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        Eigen::VectorXd r(n + s);
        r.head(n) = inv_noise.cwiseProduct(y - obs.apply(coeffs_of(z)));
        r.tail(s) = z;
        return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
        Eigen::MatrixXd j(n + s, s);
        j.topRows(n) = -(inv_noise.asDiagonal() * obs.jacobian(coeffs_of(z)) * scale.asDiagonal());
        j.bottomRows(s).setIdentity();
        return j;
    };

    const Eigen::VectorXd z0 = (init.coeffs() - c0).cwiseQuotient(scale);
    const LeastSquaresResult r = minimize_least_squares(residual, jacobian, z0,
                                                        LeastSquaresOptions{options.gradient_tol, options.max_iterations});
    if (!std::isfinite(r.objective)) throw NumericalError("Onsager-Machlup objective is not finite");
    MapResult out{SpectralField(spec.dim, spec.order, coeffs_of(r.x)), r.objective, r.gradient_norm, r.iterations,
                  r.converged};
    if (!out.converged) {
        std::ostringstream msg;
        msg << "MAP optimizer stopped after " << out.iterations << " iterations with gradient norm " << out.gradient_norm;
        log(LogLevel::Warning, msg.str());
    }
    return out;
}

}  // namespace bbgp
