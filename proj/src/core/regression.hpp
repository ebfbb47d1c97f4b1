#pragma once

// GP conditioning under the physics-informed prior GP(u0, beta^{-1} k),
// kernel ridge regression, and the beta marginal likelihood.
//
// Two observation models are supported:
//   * point data y_i = u(x_i) + noise (Dataset), used for field reconstruction;
//   * coefficient data d = u_hat + noise on the first M spectral coefficients
//     (CoefficientData), under which the beta MAP limits are exact.

#include "core/kernels.hpp"
#include "core/linalg.hpp"
#include "core/optimize.hpp"
#include "core/pde.hpp"
#include "core/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>

namespace bbgp {

inline constexpr double kNoiseFloor = 1e-12;

struct Dataset {
    PointList X;
    Eigen::VectorXd y;
    double sigma2 = kNoiseFloor;

    /// Validates shapes and the cube; sigma2 below the floor is raised to it with a warning.
    static Dataset create(PointList X, Eigen::VectorXd y, double sigma2);
    [[nodiscard]] std::size_t size() const { return X.size(); }
    [[nodiscard]] int dim() const { return X.empty() ? 0 : static_cast<int>(X.front().size()); }
};

/// Noisy observation of the first M canonical coefficients.
struct CoefficientData {
    Eigen::VectorXd d;
    double sigma2 = kNoiseFloor;

    static CoefficientData create(Eigen::VectorXd d, double sigma2);
    [[nodiscard]] Eigen::Index size() const { return d.size(); }
};

enum class HyperPriorKind { Flat, Jeffreys, Fixed };

struct HyperPrior {
    HyperPriorKind kind = HyperPriorKind::Flat;
    double beta0 = 1.0;

    static HyperPrior flat() { return {HyperPriorKind::Flat, 1.0}; }
    static HyperPrior jeffreys() { return {HyperPriorKind::Jeffreys, 1.0}; }
    static HyperPrior fixed(double beta0);

    /// log p(beta) up to a constant.
    [[nodiscard]] double log_density(double beta) const;
    [[nodiscard]] double d_log_density(double beta) const;
};

class PosteriorModel {
public:
    PosteriorModel(KernelSpec spec, PdeSolution prior_mean, Dataset data);

    [[nodiscard]] double mean(std::span<const double> x) const;
    [[nodiscard]] double covariance(std::span<const double> x, std::span<const double> xp) const;
    /// k~(x,x), clamped at zero; negative values beyond -1e-10 are logged.
    [[nodiscard]] double variance(std::span<const double> x) const;

    [[nodiscard]] Eigen::VectorXd mean(const PointList& points) const;
    [[nodiscard]] Eigen::VectorXd variance(const PointList& points) const;

    /// Ridge parameter sigma^2 beta / n under which KRR reproduces the mean.
    [[nodiscard]] double eta() const;
    [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
    [[nodiscard]] const KernelSpec& spec() const { return spec_; }
    [[nodiscard]] const PdeSolution& prior_mean() const { return prior_mean_; }
    [[nodiscard]] const Dataset& data() const { return data_; }

private:
    KernelSpec spec_;
    PdeSolution prior_mean_;
    Dataset data_;
    SpdFactor factor_;
    Eigen::VectorXd weights_;
};

PosteriorModel condition(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data);

/// Minimizer of (1/n) sum (u(x_i) - y_i)^2 + eta ||u - u0||^2_{H_k}, with k
/// the unit-beta kernel of `spec`.
struct KrrSolution {
    Eigen::VectorXd alpha;
    KernelSpec kernel;  // beta = 1
    SpectralField u0;
    PointList X;

    [[nodiscard]] double operator()(std::span<const double> x) const;
};

KrrSolution krr_solve(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data, double eta);

// ---------------------------------------------------------------------------
// Measurement operators acting on coefficient vectors.

class MeasurementOperator {
public:
    enum class Kind { PointEval, CoefficientIdentity, Custom };
    using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using Jacobian = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

    /// Observes u(x_i) for a field of the given dimension and order.
    static MeasurementOperator point_eval(const PointList& points, int dim, int order, Eigen::VectorXd gamma);
    /// Observes the first gamma.size() coefficients.
    static MeasurementOperator coefficient_identity(int dim, int order, Eigen::VectorXd gamma);
    /// Arbitrary map with user Jacobian. The Jacobian is checked against
    /// central differences at a random coefficient vector (relative error < 1e-4).
    static MeasurementOperator custom(Map map, Jacobian jacobian, int dim, int order, Eigen::VectorXd gamma,
                                      std::uint64_t check_seed = 0x5eed);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_linear() const { return kind_ != Kind::Custom; }
    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] Eigen::Index observation_count() const { return gamma_.size(); }
    [[nodiscard]] const Eigen::VectorXd& gamma() const { return gamma_; }
    [[nodiscard]] const PointList& points() const { return points_; }

    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& coeffs) const;
    [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& coeffs) const;

private:
    MeasurementOperator() = default;

    Kind kind_ = Kind::PointEval;
    int dim_ = 1;
    int order_ = 1;
    Eigen::VectorXd gamma_;  // diagonal noise covariance
    PointList points_;
    Map map_;
    Jacobian jacobian_;
};

// ---------------------------------------------------------------------------
// Marginal likelihood in beta.

/// log N(y | u0_X, beta^{-1} K_XX + sigma^2 I).
double log_marginal(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data, double beta);
/// log N(d | c0, beta^{-1} Lambda_M + sigma^2 I).
double log_marginal(const KernelSpec& spec, const PdeSolution& prior_mean, const CoefficientData& data, double beta);
/// Dispatches on a linear operator; `y` are the observations and the noise is obs.gamma().
double log_marginal(const KernelSpec& spec, const PdeSolution& prior_mean, const Eigen::VectorXd& y, double beta,
                    const MeasurementOperator& obs);

struct CoefficientPosterior {
    Eigen::VectorXd mean;      // posterior mean of the first M coefficients
    Eigen::VectorXd variance;  // diagonal posterior covariance
};

CoefficientPosterior coefficient_posterior(const KernelSpec& spec, const PdeSolution& prior_mean,
                                           const CoefficientData& data, double beta);

/// d/dbeta [log_marginal + log p(beta)] in the coefficient model:
///   M/(2 beta) + d log p - 1/2 <m - c0, Lambda^{-1}(m - c0)> - 1/2 tr(Lambda^{-1} Sigma~).
double beta_gradient(const KernelSpec& spec, const PdeSolution& prior_mean, const CoefficientData& data, double beta,
                     const HyperPrior& hyper);

struct BetaEstimate {
    double beta = 1.0;
    double objective = 0.0;  // log_marginal + log p at beta
    BracketBoundary boundary = BracketBoundary::None;

    /// The search ran into the upper end: data agree with u0 (prior collapses to a Dirac).
    [[nodiscard]] bool dirac_limit() const { return boundary == BracketBoundary::Upper; }
};

inline constexpr double kLogBetaMin = -12.0;
inline constexpr double kLogBetaMax = 12.0;
inline constexpr double kLogBetaTol = 1e-10;

/// Maximizes log_marginal + log p(beta) over log beta in [-12, 12].
BetaEstimate beta_map(const KernelSpec& spec, const PdeSolution& prior_mean, const CoefficientData& data,
                      const HyperPrior& hyper);
BetaEstimate beta_map(const KernelSpec& spec, const PdeSolution& prior_mean, const Dataset& data,
                      const HyperPrior& hyper);

/// M / sum_alpha lambda_alpha^{-1} (c*_alpha - c0_alpha)^2 over the first M coefficients.
double beta_limit_flat(const KernelSpec& spec, const SpectralField& truth, const SpectralField& prior_mean, Eigen::Index m);

// ---------------------------------------------------------------------------

/// Linear-Gaussian model d ~ N(offset + G theta, Q diag(D / beta + sigma^2) Q^T),
/// stored in the rotated frame where the covariance is diagonal.
class DiagonalGaussianModel {
public:
    /// Coefficient observations: Q = I, D = first M eigenvalues.
    static DiagonalGaussianModel coefficients(const KernelSpec& spec, const Eigen::VectorXd& residual, double sigma2);
    /// Point observations: Q, D from the eigendecomposition of the unit-beta Gram matrix.
    static DiagonalGaussianModel points(const KernelSpec& spec, const PointList& X, const Eigen::VectorXd& residual,
                                        double sigma2);

    [[nodiscard]] double log_density(double beta) const { return log_density(beta, residual_); }
    /// Log density of an already rotated residual.
    [[nodiscard]] double log_density(double beta, const Eigen::VectorXd& rotated_residual) const;

    [[nodiscard]] Eigen::VectorXd rotate(const Eigen::VectorXd& v) const;
    [[nodiscard]] Eigen::MatrixXd rotate(const Eigen::MatrixXd& m) const;
    [[nodiscard]] Eigen::VectorXd variances(double beta) const;
    [[nodiscard]] const Eigen::VectorXd& rotated_residual() const { return residual_; }

private:
    std::optional<Eigen::MatrixXd> q_;  // identity when empty
    Eigen::VectorXd d_;
    double sigma2_ = kNoiseFloor;
    Eigen::VectorXd residual_;
};

}  // namespace bbgp
