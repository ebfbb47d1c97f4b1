#include "core/pde.hpp"

#include "core/error.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace bbgp {

struct SourceModel::Cache {
    std::mutex mutex;
    std::map<int, SpectralField> by_order;
};

SourceModel SourceModel::spectral(SpectralField coeffs) {
    SourceModel q;
    q.dim_ = coeffs.dim();
    q.label_ = "spectral";
    q.spectral_ = std::make_shared<const SpectralField>(std::move(coeffs));
    return q;
}

SourceModel SourceModel::closed_form(Expression expr, std::vector<double> theta) {
    require(static_cast<int>(theta.size()) >= expr.parameter_count(),
            "source expression needs " + std::to_string(expr.parameter_count()) + " parameters");
    SourceModel q;
    q.dim_ = expr.dim();
    q.label_ = expr.text();
    q.expr_ = std::make_shared<const Expression>(std::move(expr));
    q.theta_ = std::move(theta);
    q.cache_ = std::make_shared<Cache>();
    return q;
}

SourceModel SourceModel::function(ScalarFunction f, int dim, std::string label) {
    require(static_cast<bool>(f), "source function is empty");
    require(dim >= 1 && dim <= kMaxDim, "source dimension must be 1, 2 or 3");
    SourceModel q;
    q.dim_ = dim;
    q.label_ = std::move(label);
    q.func_ = std::move(f);
    q.cache_ = std::make_shared<Cache>();
    return q;
}

int SourceModel::parameter_count() const { return expr_ ? expr_->parameter_count() : 0; }

SourceModel SourceModel::with_theta(std::vector<double> theta) const {
    require(expr_ != nullptr, "only closed-form sources carry parameters");
    return closed_form(*expr_, std::move(theta));
}

double SourceModel::operator()(std::span<const double> x) const {
    if (spectral_) return (*spectral_)(x);
    check_in_cube(x, dim_);
    if (expr_) return (*expr_)(x, theta_);
    return func_(x);
}

SpectralField SourceModel::coefficients(int order, const QuadratureRule& rule) const {
    if (spectral_) {
        require(spectral_->order() == order, "spectral source order " + std::to_string(spectral_->order()) +
                                                 " does not match solver order " + std::to_string(order));
        return *spectral_;
    }
    return project([this](std::span<const double> x) { return (*this)(x); }, dim_, order, rule);
}

SpectralField SourceModel::coefficients(int order) const {
    if (spectral_) {
        require(spectral_->order() == order, "spectral source order " + std::to_string(spectral_->order()) +
                                                 " does not match solver order " + std::to_string(order));
        return *spectral_;
    }
    {
        std::lock_guard lock(cache_->mutex);
        if (auto it = cache_->by_order.find(order); it != cache_->by_order.end()) return it->second;
    }
    SpectralField c = coefficients(order, QuadratureRule::for_order(dim_, order));
    std::lock_guard lock(cache_->mutex);
    cache_->by_order.emplace(order, c);
    return c;
}

PdeSolution solve(const SourceModel& q, const KernelSpec& spec) {
    spec.validate();
    require(q.dim() == spec.dim, "source dimension does not match kernel dimension");
    const SpectralField qc = q.coefficients(spec.order);
    Eigen::VectorXd c0 = eigenvalues(spec).cwiseProduct(qc.coeffs());
    return PdeSolution{SpectralField(spec.dim, spec.order, std::move(c0)), spec.family, spec.omega};
}

namespace {

// integral of |grad u|^2 for a band-limited u
double dirichlet_seminorm_sq(const SpectralField& u) {
    const auto indices = enumerate_indices(u.dim(), u.order());
    double total = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const double c = u.coeffs()(static_cast<Eigen::Index>(k));
        total += std::numbers::pi * std::numbers::pi * static_cast<double>(indices[k].squared_norm()) * c * c;
    }
    return total;
}

}  // namespace

double energy(const SpectralField& u, const SourceModel& q, const QuadratureRule& rule) {
    require(q.dim() == u.dim(), "source dimension does not match field dimension");
    // u is band-limited, so the quadrature of q u is exactly sum_alpha c_alpha <q, psi_alpha>_rule
    return 0.5 * dirichlet_seminorm_sq(u) - l2_inner(u, q.coefficients(u.order(), rule));
}

double energy(const SpectralField& u, const SourceModel& q) {
    require(q.dim() == u.dim(), "source dimension does not match field dimension");
    return 0.5 * dirichlet_seminorm_sq(u) - l2_inner(u, q.coefficients(u.order()));
}

double energy_rkhs_shift(const SpectralField& u, const SourceModel& q, const KernelSpec& spec) {
    require(spec.family == KernelFamily::Bridge, "energy_rkhs_shift is defined for the bridge kernel");
    const PdeSolution sol = solve(q, spec);
    return 0.5 * rkhs_sq_norm(spec, u - sol.u0);
}

double half_source_energy(const SourceModel& q, const KernelSpec& spec) {
    const SpectralField qc = q.coefficients(spec.order);
    return 0.5 * qc.coeffs().cwiseAbs2().dot(eigenvalues(spec));
}

}  // namespace bbgp
