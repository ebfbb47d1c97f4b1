#include "core/regression.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bbgp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Eigen::VectorXd evaluate_at(const SpectralField& u, const PointList& points) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) out(static_cast<Eigen::Index>(i)) = u(points[i]);
    return out;
}

void check_prior(const KernelSpec& spec, const PdeSolution& prior_mean) {
    require(prior_mean.u0.dim() == spec.dim && prior_mean.u0.order() == spec.order,
            "prior mean truncation does not match the kernel spec");
}

void check_beta(double beta) { require(std::isfinite(beta) && beta > 0.0, "beta must be a finite positive number"); }

}  // namespace

Dataset Dataset::create(PointList X, Eigen::VectorXd y, double sigma2) {
    require(!X.empty(), "dataset needs at least one observation");
    require(static_cast<std::size_t>(y.size()) == X.size(), "dataset has " + std::to_string(X.size()) +
                                                                 " points but " + std::to_string(y.size()) + " values");
    const int dim = static_cast<int>(X.front().size());
    for (const auto& x : X) check_in_cube(x, dim);
    require(y.allFinite(), "observations must be finite");
    require(std::isfinite(sigma2) && sigma2 >= 0.0, "noise variance must be finite and non-negative");
    if (sigma2 < kNoiseFloor) {
        std::ostringstream msg;
        msg << "noise variance " << sigma2 << " raised to the floor " << kNoiseFloor;
        log(LogLevel::Warning, msg.str());
        sigma2 = kNoiseFloor;
    }
    return Dataset{std::move(X), std::move(y), sigma2};
}

CoefficientData CoefficientData::create(Eigen::VectorXd d, double sigma2) {
    require(d.size() >= 1, "coefficient data must be non-empty");
    require(d.allFinite(), "coefficient observations must be finite");
    require(std::isfinite(sigma2) && sigma2 >= 0.0, "noise variance must be finite and non-negative");
    if (sigma2 < kNoiseFloor) {
        std::ostringstream msg;
        msg << "noise variance " << sigma2 << " raised to the floor " << kNoiseFloor;
        log(LogLevel::Warning, msg.str());
        sigma2 = kNoiseFloor;
    }
    return CoefficientData{std::move(d), sigma2};
}

HyperPrior HyperPrior::fixed(double beta0) {
    check_beta(beta0);
    return {HyperPriorKind::Fixed, beta0};
}

double HyperPrior::log_density(double beta) const {
    return kind == HyperPriorKind::Jeffreys ? -std::log(beta) : 0.0;
}

double HyperPrior::d_log_density(double beta) const {
    return kind == HyperPriorKind::Jeffreys ? -1.0 / beta : 0.0;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd noisy_gram(const KernelSpec& spec, const Dataset& data) {
    Eigen::MatrixXd a = gram(spec, data.X);
    a.diagonal().array() += data.sigma2;
    return a;
}

Eigen::MatrixXd checked_noisy_gram(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data) {
    spec.validate();
    check_prior(spec, prior_mean);
    require(data.dim() == spec.dim, "data dimension does not match kernel dimension");
    return noisy_gram(spec, data);
}

}  // namespace

PosteriorModel::PosteriorModel(KernelSpec spec, PdeSolution prior_mean, Dataset data)
    : spec_(std::move(spec)),
      prior_mean_(std::move(prior_mean)),
      data_(std::move(data)),
      factor_(checked_noisy_gram(spec_, prior_mean_, data_), "posterior conditioning") {
    weights_ = factor_.solve(Eigen::VectorXd(data_.y - evaluate_at(prior_mean_.u0, data_.X)));
}

double PosteriorModel::mean(std::span<const double> x) const {
    return prior_mean_.u0(x) + kernel_cross(spec_, x, data_.X).dot(weights_);
}

double PosteriorModel::covariance(std::span<const double> x, std::span<const double> xp) const {
    const Eigen::VectorXd kx = kernel_cross(spec_, x, data_.X);
    const Eigen::VectorXd kxp = kernel_cross(spec_, xp, data_.X);
    return kernel_eval(spec_, x, xp) - kx.dot(factor_.solve(kxp));
}

double PosteriorModel::variance(std::span<const double> x) const {
    const double v = covariance(x, x);
    if (v < -1e-10) {
        std::ostringstream msg;
        msg << "posterior variance " << v << " clamped to zero";
        log(LogLevel::Warning, msg.str());
    }
    return std::max(v, 0.0);
}

Eigen::VectorXd PosteriorModel::mean(const PointList& points) const {
    Eigen::VectorXd out = evaluate_at(prior_mean_.u0, points);
    out += kernel_cross(spec_, points, data_.X) * weights_;
    return out;
}

Eigen::VectorXd PosteriorModel::variance(const PointList& points) const {
    const Eigen::MatrixXd kx = kernel_cross(spec_, points, data_.X);
    const Eigen::MatrixXd solved = factor_.solve(Eigen::MatrixXd(kx.transpose()));
    Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const auto& x = points[static_cast<std::size_t>(i)];
        const double v = kernel_eval(spec_, x, x) - kx.row(i).dot(solved.col(i));
        if (v < -1e-10) {
            std::ostringstream msg;
            msg << "posterior variance " << v << " clamped to zero";
            log(LogLevel::Warning, msg.str());
        }
        out(i) = std::max(v, 0.0);
    }
    return out;
}

double PosteriorModel::eta() const { return data_.sigma2 * spec_.beta / static_cast<double>(data_.size()); }

PosteriorModel condition(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data) {
    return PosteriorModel(spec, prior_mean, data);
}

// ---------------------------------------------------------------------------

double KrrSolution::operator()(std::span<const double> x) const {
    return u0(x) + kernel_cross(kernel, x, X).dot(alpha);
}

KrrSolution krr_solve(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data, double eta) {
    require(std::isfinite(eta) && eta > 0.0, "ridge parameter eta must be positive");
    check_prior(spec, prior_mean);
    const KernelSpec unit = spec.with_beta(1.0);
    Eigen::MatrixXd a = gram(unit, data.X);
    a.diagonal().array() += static_cast<double>(data.size()) * eta;
    const Eigen::VectorXd residual = data.y - evaluate_at(prior_mean.u0, data.X);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw NumericalError("kernel ridge system is singular");
    return KrrSolution{ldlt.solve(residual), unit, prior_mean.u0, data.X};
}

// ---------------------------------------------------------------------------

MeasurementOperator MeasurementOperator::point_eval(const PointList& points, int dim, int order, Eigen::VectorXd gamma) {
    require(!points.empty(), "point evaluation needs at least one point");
    require(static_cast<std::size_t>(gamma.size()) == points.size(), "one noise variance per point is required");
    require((gamma.array() > 0.0).all(), "noise variances must be positive");
    MeasurementOperator op;
    op.kind_ = Kind::PointEval;
    op.dim_ = dim;
    op.order_ = order;
    op.gamma_ = std::move(gamma);
    op.points_ = points;
    const Eigen::MatrixXd phi = basis_matrix(dim, order, points);
    op.map_ = [phi](const Eigen::VectorXd& c) -> Eigen::VectorXd { return phi * c; };
    op.jacobian_ = [phi](const Eigen::VectorXd&) -> Eigen::MatrixXd { return phi; };
    return op;
}

MeasurementOperator MeasurementOperator::coefficient_identity(int dim, int order, Eigen::VectorXd gamma) {
    const auto count = static_cast<Eigen::Index>(coefficient_count(dim, order));
    require(gamma.size() >= 1 && gamma.size() <= count, "coefficient observation count must lie in [1, S^d]");
    require((gamma.array() > 0.0).all(), "noise variances must be positive");
    MeasurementOperator op;
    op.kind_ = Kind::CoefficientIdentity;
    op.dim_ = dim;
    op.order_ = order;
    const Eigen::Index m = gamma.size();
    op.gamma_ = std::move(gamma);
    op.map_ = [m](const Eigen::VectorXd& c) -> Eigen::VectorXd { return c.head(m); };
    op.jacobian_ = [m, count](const Eigen::VectorXd&) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Identity(m, count);
    };
    return op;
}

MeasurementOperator MeasurementOperator::custom(Map map, Jacobian jacobian, int dim, int order, Eigen::VectorXd gamma,
                                                std::uint64_t check_seed) {
    require(map && jacobian, "custom measurement operator needs a map and its Jacobian");
    require(gamma.size() >= 1 && (gamma.array() > 0.0).all(), "noise variances must be positive");
    const auto count = static_cast<Eigen::Index>(coefficient_count(dim, order));
    MeasurementOperator op;
    op.kind_ = Kind::Custom;
    op.dim_ = dim;
    op.order_ = order;
    op.gamma_ = std::move(gamma);
    op.map_ = std::move(map);
    op.jacobian_ = std::move(jacobian);

    // directional derivative check at a random point
    Eigen::VectorXd c(count), v(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        const double scale = 1.0 / static_cast<double>(k + 1);
        c(k) = scale * random::normal(check_seed, 0, static_cast<std::uint64_t>(k));
        v(k) = scale * random::normal(check_seed, 1, static_cast<std::uint64_t>(k));
    }
    const Eigen::VectorXd value = op.map_(c);
    require(value.size() == op.gamma_.size(), "custom map output size does not match the noise vector");
    const Eigen::MatrixXd jac = op.jacobian_(c);
    require(jac.rows() == value.size() && jac.cols() == count, "custom Jacobian has the wrong shape");
    const double h = 1e-6;
    const Eigen::VectorXd fd = (op.map_(c + h * v) - op.map_(c - h * v)) / (2.0 * h);
    const Eigen::VectorXd analytic = jac * v;
    const double err = (fd - analytic).norm() / std::max(analytic.norm(), 1e-300);
    if (!(err < 1e-4))
        throw InvalidArgument("custom Jacobian disagrees with finite differences (relative error " +
                              std::to_string(err) + ")");
    return op;
}

Eigen::VectorXd MeasurementOperator::apply(const Eigen::VectorXd& coeffs) const { return map_(coeffs); }
Eigen::MatrixXd MeasurementOperator::jacobian(const Eigen::VectorXd& coeffs) const { return jacobian_(coeffs); }

// ---------------------------------------------------------------------------

double log_marginal(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data, double beta) {
    check_beta(beta);
    check_prior(spec, prior_mean);
    const KernelSpec scaled = spec.with_beta(beta);
    const SpdFactor factor(noisy_gram(scaled, data), "log marginal");
    const Eigen::VectorXd r = data.y - evaluate_at(prior_mean.u0, data.X);
    const double n = static_cast<double>(data.size());
    return -0.5 * (r.dot(factor.solve(r)) + factor.log_determinant() + n * kLog2Pi);
}

double log_marginal(const KernelSpec& spec, const PdeSolution& prior_mean, const CoefficientData& data, double beta) {
    check_beta(beta);
    check_prior(spec, prior_mean);
    return DiagonalGaussianModel::coefficients(spec, data.d - prior_mean.u0.coeffs().head(data.size()), data.sigma2)
        .log_density(beta);
}

double log_marginal(const KernelSpec& spec, const PdeSolution& prior_mean, const Eigen::VectorXd& y, double beta,
                    const MeasurementOperator& obs) {
    check_beta(beta);
    check_prior(spec, prior_mean);
    require(obs.is_linear(), "log_marginal needs a linear observation operator; use map_nonlinear for custom maps");
    require(y.size() == obs.observation_count(), "observation vector size does not match the operator");
    const Eigen::VectorXd r = y - obs.apply(prior_mean.u0.coeffs());
    Eigen::MatrixXd cov;
    if (obs.kind() == MeasurementOperator::Kind::PointEval) {
        cov = gram(spec.with_beta(beta), obs.points());
    } else {
        const Eigen::VectorXd lambda = eigenvalues(spec).head(y.size());
        cov = Eigen::MatrixXd((lambda / beta).asDiagonal());
    }
    cov.diagonal() += obs.gamma();
    const SpdFactor factor(cov, "log marginal");
    return -0.5 * (r.dot(factor.solve(r)) + factor.log_determinant() + static_cast<double>(r.size()) * kLog2Pi);
}

CoefficientPosterior coefficient_posterior(const KernelSpec& spec, const PdeSolution& prior_mean,
                                           const CoefficientData& data, double beta) {
    check_beta(beta);
    check_prior(spec, prior_mean);
    const Eigen::Index m = data.size();
    require(m <= prior_mean.u0.coeffs().size(), "more coefficient observations than basis functions");
    const Eigen::VectorXd prior_var = eigenvalues(spec).head(m) / beta;
    const Eigen::VectorXd c0 = prior_mean.u0.coeffs().head(m);
    const Eigen::ArrayXd gain = prior_var.array() / (prior_var.array() + data.sigma2);
    CoefficientPosterior post;
    post.mean = c0.array() + gain * (data.d - c0).array();
    post.variance = gain * data.sigma2;
    return post;
}

double beta_gradient(const KernelSpec& spec, const PdeSolution& prior_mean, const CoefficientData& data, double beta,
                     const HyperPrior& hyper) {
    const CoefficientPosterior post = coefficient_posterior(spec, prior_mean, data, beta);
    const Eigen::Index m = data.size();
    const Eigen::VectorXd lambda = eigenvalues(spec).head(m);
    const Eigen::VectorXd shift = post.mean - prior_mean.u0.coeffs().head(m);
    const double quadratic = shift.cwiseAbs2().cwiseQuotient(lambda).sum();
    const double trace = post.variance.cwiseQuotient(lambda).sum();
    return static_cast<double>(m) / (2.0 * beta) + hyper.d_log_density(beta) - 0.5 * quadratic - 0.5 * trace;
}

namespace {

BetaEstimate maximize_beta(const std::function<double(double)>& log_density, const HyperPrior& hyper) {
    require(hyper.kind != HyperPriorKind::Fixed, "beta_map needs a flat or Jeffreys prior, not a fixed beta");
    auto objective = [&](double log_beta) {
        const double beta = std::exp(log_beta);
        return log_density(beta) + hyper.log_density(beta);
    };
    const ScalarMaximum best = maximize_bracketed(objective, kLogBetaMin, kLogBetaMax, kLogBetaTol, 97);
    BetaEstimate out{std::exp(best.x), best.value, best.boundary};
    if (best.boundary == BracketBoundary::Upper)
        log(LogLevel::Warning, "beta search hit the upper bracket: data are consistent with the prior mean (Dirac limit)");
    else if (best.boundary == BracketBoundary::Lower)
        log(LogLevel::Warning, "beta search hit the lower bracket: the prior mean carries no information");
    return out;
}

}  // namespace

BetaEstimate beta_map(const KernelSpec& spec, const PdeSolution& prior_mean, const CoefficientData& data,
                      const HyperPrior& hyper) {
    check_prior(spec, prior_mean);
    const auto model = DiagonalGaussianModel::coefficients(spec, data.d - prior_mean.u0.coeffs().head(data.size()), data.sigma2);
    return maximize_beta([&](double beta) { return model.log_density(beta); }, hyper);
}

BetaEstimate beta_map(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data,
                      const HyperPrior& hyper) {
    check_prior(spec, prior_mean);
    const auto model =
        DiagonalGaussianModel::points(spec, data.X, data.y - evaluate_at(prior_mean.u0, data.X), data.sigma2);
    return maximize_beta([&](double beta) { return model.log_density(beta); }, hyper);
}

double beta_limit_flat(const KernelSpec& spec, const SpectralField& truth, const SpectralField& prior_mean, Eigen::Index m) {
    require(truth.coeffs().size() >= m && prior_mean.coeffs().size() >= m, "not enough coefficients");
    const Eigen::VectorXd lambda = eigenvalues(spec).head(m);
    const Eigen::VectorXd diff = truth.coeffs().head(m) - prior_mean.coeffs().head(m);
    const double dist = diff.cwiseAbs2().cwiseQuotient(lambda).sum();
    if (dist <= 0.0) throw NumericalError("truth equals the prior mean: the flat-prior beta limit is infinite");
    return static_cast<double>(m) / dist;
}

// ---------------------------------------------------------------------------

DiagonalGaussianModel DiagonalGaussianModel::coefficients(const KernelSpec& spec, const Eigen::VectorXd& residual,
                                                          double sigma2) {
    const auto count = static_cast<Eigen::Index>(coefficient_count(spec.dim, spec.order));
    require(residual.size() >= 1 && residual.size() <= count, "coefficient count must lie in [1, S^d]");
    DiagonalGaussianModel m;
    m.d_ = eigenvalues(spec).head(residual.size());
    m.sigma2_ = sigma2;
    m.residual_ = residual;
    return m;
}

DiagonalGaussianModel DiagonalGaussianModel::points(const KernelSpec& spec, const PointList& X,
                                                    const Eigen::VectorXd& residual, double sigma2) {
    require(static_cast<std::size_t>(residual.size()) == X.size(), "residual size does not match point count");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram(spec.with_beta(1.0), X));
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the Gram matrix failed");
    DiagonalGaussianModel m;
    m.q_ = eig.eigenvectors();
    m.d_ = eig.eigenvalues().cwiseMax(0.0);
    m.sigma2_ = sigma2;
    m.residual_ = m.q_->transpose() * residual;
    return m;
}

double DiagonalGaussianModel::log_density(double beta, const Eigen::VectorXd& rotated_residual) const {
    const Eigen::ArrayXd v = variances(beta).array();
    return -0.5 * ((v.log() + kLog2Pi).sum() + (rotated_residual.array().square() / v).sum());
}

Eigen::VectorXd DiagonalGaussianModel::rotate(const Eigen::VectorXd& v) const {
    return q_ ? Eigen::VectorXd(q_->transpose() * v) : v;
}

Eigen::MatrixXd DiagonalGaussianModel::rotate(const Eigen::MatrixXd& m) const {
    return q_ ? Eigen::MatrixXd(q_->transpose() * m) : m;
}

Eigen::VectorXd DiagonalGaussianModel::variances(double beta) const {
    return (d_.array() / beta + sigma2_).matrix();
}

}  // namespace bbgp
