#include "core/kernels.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bbgp {
namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

bool uses_closed_form(const KernelSpec& spec) { return spec.family == KernelFamily::Bridge && spec.dim == 1; }

double bridge_closed_form(double x, double xp) { return std::min(x, xp) - x * xp; }

Eigen::MatrixXd weighted_features(const KernelSpec& spec, const PointList& points) {
    Eigen::MatrixXd phi = basis_matrix(spec.dim, spec.order, points);
    const Eigen::VectorXd root = eigenvalues(spec).cwiseSqrt();
    return phi * root.asDiagonal();
}

}  // namespace

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::Bridge: return "bridge";
        case KernelFamily::Helmholtz: return "helmholtz";
        case KernelFamily::Power: return "power";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "bridge") return KernelFamily::Bridge;
    if (name == "helmholtz") return KernelFamily::Helmholtz;
    if (name == "power") return KernelFamily::Power;
    throw InvalidArgument("unknown kernel family '" + name + "' (expected bridge, helmholtz or power)");
}

int default_order(int dim) {
    switch (dim) {
        case 1: return 512;
        case 2: return 64;
        case 3: return 32;
        default: throw InvalidArgument("dimension must be 1, 2 or 3");
    }
}

KernelSpec KernelSpec::bridge(int dim, double beta, int order) {
    KernelSpec s;
    s.family = KernelFamily::Bridge;
    s.dim = dim;
    s.order = order > 0 ? order : default_order(dim);
    s.beta = beta;
    s.validate();
    return s;
}

KernelSpec KernelSpec::helmholtz(double omega, double beta, int order) {
    KernelSpec s;
    s.family = KernelFamily::Helmholtz;
    s.order = order > 0 ? order : default_order(1);
    s.beta = beta;
    s.omega = omega;
    s.validate();
    return s;
}

KernelSpec KernelSpec::power(double p, double beta, int order) {
    KernelSpec s;
    s.family = KernelFamily::Power;
    s.order = order > 0 ? order : default_order(1);
    s.beta = beta;
    s.p = p;
    s.validate();
    return s;
}

KernelSpec KernelSpec::with_beta(double b) const {
    KernelSpec s = *this;
    s.beta = b;
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    coefficient_count(dim, order);
    require(std::isfinite(beta) && beta > 0.0, "beta must be a finite positive number");
    switch (family) {
        case KernelFamily::Bridge: break;
        case KernelFamily::Power:
            require(dim == 1, "the power kernel is only defined for d = 1");
            require(p > 0.5 && p <= 1.0, "power kernel exponent must lie in (1/2, 1]");
            break;
        case KernelFamily::Helmholtz: {
            require(dim == 1, "the helmholtz kernel is only defined for d = 1");
            require(std::isfinite(omega), "helmholtz omega must be finite");
            const double w2 = omega * omega;
            for (int n = 1; n <= order; ++n) {
                const double gap = n * n * kPi2 - w2;
                if (std::abs(gap) <= 1e-12 * n * n * kPi2)
                    throw NumericalError("helmholtz resonance: omega^2 equals (" + std::to_string(n) + " pi)^2");
            }
            // Every eigenvalue must be positive for k to be a covariance.
            if (w2 >= kPi2)
                throw NumericalError("helmholtz omega^2 must stay below pi^2 for a positive definite kernel");
            break;
        }
    }
}

double eigenvalue(const KernelSpec& spec, const MultiIndex& alpha) {
    require(alpha.dim() == spec.dim, "multi-index dimension does not match kernel dimension");
    for (int v : alpha.n) require(v >= 1, "multi-index entries must be >= 1");
    const double laplace = kPi2 * static_cast<double>(alpha.squared_norm());
    switch (spec.family) {
        case KernelFamily::Bridge: return 1.0 / laplace;
        case KernelFamily::Power: return std::pow(laplace, -spec.p);
        case KernelFamily::Helmholtz: {
            const double gap = laplace - spec.omega * spec.omega;
            if (gap <= 0.0)
                throw NumericalError("helmholtz resonance: n^2 pi^2 - omega^2 = " + std::to_string(gap) +
                                     " is not positive");
            return 1.0 / gap;
        }
    }
    return 0.0;
}

Eigen::VectorXd eigenvalues(const KernelSpec& spec) {
    const auto indices = enumerate_indices(spec.dim, spec.order);
    Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) out(static_cast<Eigen::Index>(k)) = eigenvalue(spec, indices[k]);
    return out;
}

double mercer_sum(const KernelSpec& spec, std::span<const double> x, std::span<const double> xp) {
    check_in_cube(x, spec.dim);
    check_in_cube(xp, spec.dim);
    const PointList pts{Point(x.begin(), x.end()), Point(xp.begin(), xp.end())};
    const Eigen::MatrixXd phi = basis_matrix(spec.dim, spec.order, pts);
    const Eigen::VectorXd lambda = eigenvalues(spec);
    const double v = (phi.row(0).transpose().cwiseProduct(lambda)).dot(phi.row(1).transpose());
    return v / spec.beta;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> xp) {
    if (uses_closed_form(spec)) {
        check_in_cube(x, 1);
        check_in_cube(xp, 1);
        return bridge_closed_form(x[0], xp[0]) / spec.beta;
    }
    return mercer_sum(spec, x, xp);
}

Eigen::MatrixXd gram(const KernelSpec& spec, const PointList& points) {
    require(!points.empty(), "gram matrix needs at least one point");
    return kernel_cross(spec, points, points);
}

Eigen::VectorXd kernel_cross(const KernelSpec& spec, std::span<const double> x, const PointList& points) {
    const PointList single{Point(x.begin(), x.end())};
    return kernel_cross(spec, single, points).row(0).transpose();
}

Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const PointList& a, const PointList& b) {
    const auto na = static_cast<Eigen::Index>(a.size());
    const auto nb = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd out(na, nb);
    if (uses_closed_form(spec)) {
        for (const auto& x : a) check_in_cube(x, 1);
        for (const auto& x : b) check_in_cube(x, 1);
        for (Eigen::Index i = 0; i < na; ++i)
            for (Eigen::Index j = 0; j < nb; ++j)
                out(i, j) = bridge_closed_form(a[static_cast<std::size_t>(i)][0], b[static_cast<std::size_t>(j)][0]) / spec.beta;
        return out;
    }
    const Eigen::MatrixXd fa = weighted_features(spec, a);
    if (&a == &b) {
        out = fa * fa.transpose();
        // exact symmetry regardless of BLAS summation order
        out = 0.5 * (out + out.transpose()).eval();
    } else {
        out = fa * weighted_features(spec, b).transpose();
    }
    return out / spec.beta;
}

double rkhs_sq_norm(const KernelSpec& spec, const SpectralField& u) {
    require(u.dim() == spec.dim && u.order() == spec.order,
            "field order/dimension does not match the kernel truncation");
    return u.coeffs().cwiseAbs2().cwiseQuotient(eigenvalues(spec)).sum();
}

}  // namespace bbgp
