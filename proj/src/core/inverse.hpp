#pragma once

// Source-term inversion under the physics-informed prior, and the MAP
// estimate for nonlinear measurement operators.

#include "core/kernels.hpp"
#include "core/optimize.hpp"
#include "core/pde.hpp"
#include "core/regression.hpp"

#include <Eigen/Dense>

#include <vector>

namespace bbgp {

struct InverseResult {
    Eigen::VectorXd theta_mean;
    Eigen::MatrixXd theta_cov;
    BetaEstimate beta;
    /// Orthonormal directions of theta the data cannot identify; the
    /// covariance is the pseudo-inverse on the identifiable complement.
    std::vector<Eigen::VectorXd> flat_directions;
    bool laplace = false;  // covariance from a Gauss-Newton Laplace approximation
    bool converged = true;
};

/// Sources linear in theta, q = sum_j theta_j q_j, with a flat theta prior.
/// Beta comes from `hyper` when fixed, otherwise from maximizing the profiled
/// objective max_theta log N(d | G theta, C(beta)) + log p(beta).
InverseResult invert_source(const std::vector<SourceModel>& basis, const CoefficientData& data,
                            const HyperPrior& hyper, const KernelSpec& spec);
InverseResult invert_source(const std::vector<SourceModel>& basis, const Dataset& data, const HyperPrior& hyper,
                            const KernelSpec& spec);

/// Closed-form source with free parameters theta1..thetam entering nonlinearly.
/// Returns the MAP theta and a Laplace covariance.
InverseResult invert_source(const SourceModel& family, const Eigen::VectorXd& theta0, const CoefficientData& data,
                            const HyperPrior& hyper, const KernelSpec& spec);
InverseResult invert_source(const SourceModel& family, const Eigen::VectorXd& theta0, const Dataset& data,
                            const HyperPrior& hyper, const KernelSpec& spec);

struct MapOptions {
    double gradient_tol = 1e-8;
    int max_iterations = 500;
};

struct MapResult {
    SpectralField u;
    double objective = 0.0;
    double gradient_norm = 0.0;  // in prior-whitened coordinates
    int iterations = 0;
    bool converged = false;
};

/// 1/2 (y - R(u))^T Gamma^{-1} (y - R(u)) + beta/2 ||u - u0||^2_{H_k}.
double onsager_machlup(const MeasurementOperator& obs, const Eigen::VectorXd& y, const SourceModel& q,
                       const KernelSpec& spec, const SpectralField& u);

/// Minimizes onsager_machlup over coefficient vectors (d = 1 only).
MapResult map_nonlinear(const MeasurementOperator& obs, const Eigen::VectorXd& y, const SourceModel& q,
                        const KernelSpec& spec, const SpectralField& init, const MapOptions& options = {});

}  // namespace bbgp
