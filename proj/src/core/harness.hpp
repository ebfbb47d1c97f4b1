#pragma once

// Design metrics and the desk-scale convergence and model-error studies.

#include "core/inverse.hpp"
#include "core/kernels.hpp"
#include "core/pde.hpp"
#include "core/regression.hpp"
#include "core/spectral.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bbgp {

struct DesignMetrics {
    double fill = 0.0;        // h_X
    double separation = 0.0;  // r_X
    double mesh_ratio = 0.0;  // h_X / r_X
};

/// Points per axis of the grid on which the fill distance sup is taken
/// (about 10^4 points in total). The reported fill distance may undershoot
/// the exact value by at most one grid spacing.
int fill_grid_points_per_axis(int dim);

DesignMetrics design_metrics(const PointList& X);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double half_width = 0.0;  // 95% confidence half-width of the slope
};

/// Least-squares line through (log x, log y).
SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceRow {
    int n = 0;
    double fill = 0.0;
    double l2_error = 0.0;       // ||u* - m~||_{L2}
    double variance_norm = 0.0;  // ||k~(x,x)^{1/2}||_{L2}
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    SlopeFit error_slope;     // log error against log n
    SlopeFit variance_slope;  // log variance norm against log n
};

struct ConvergenceOptions {
    double sigma2 = 1e-8;
    bool noisy = false;          // add N(0, sigma2) noise to the data
    int nodes_per_interval = 8;  // Gauss-Legendre nodes between consecutive data sites
};

/// 1D sweep over uniform interior grids x_i = i / (n + 1). Data come from
/// `truth`; the prior mean solves the PDE with the assumed source.
ConvergenceReport convergence_study(const ScalarFunction& truth, const SourceModel& q_assumed, const KernelSpec& spec,
                                    const std::vector<int>& ns, std::uint64_t seed,
                                    const ConvergenceOptions& options = {});

struct ModelErrorRow {
    double epsilon = 0.0;
    BetaEstimate beta;                    // flat (or configured) hyperprior
    std::optional<double> beta_formula;   // M / ||u* - u0||^2_{H_k}; empty when u* = u0
    std::optional<double> ratio;          // beta / beta_formula
    std::optional<double> jeffreys_ratio; // beta_Jeffreys / beta_flat, flat hyperprior only
    std::optional<double> theta_cov_trace;
};

struct ModelErrorReport {
    std::vector<ModelErrorRow> rows;
    Eigen::Index observed = 0;  // M
};

struct ModelErrorOptions {
    Eigen::Index observed = 2000;
    double sigma2 = 1e-12;
    bool noisy = false;
    HyperPrior hyper = HyperPrior::flat();
    /// When non-empty, each row also records the trace of the theta covariance
    /// for sources spanned by this basis.
    std::vector<SourceModel> theta_basis;
};

/// Truth family u*(eps) = u0 + eps * perturbation observed through the first
/// M coefficients.
ModelErrorReport model_error_study(const SourceModel& q, const KernelSpec& spec, const SpectralField& perturbation,
                                   const std::vector<double>& epsilons, std::uint64_t seed,
                                   const ModelErrorOptions& options = {});

}  // namespace bbgp
