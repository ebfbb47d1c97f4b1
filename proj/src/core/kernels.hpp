#pragma once

// Green's-function covariance kernels of -Laplacian (Brownian bridge),
// -(Laplacian + omega^2) (Helmholtz) and fractional powers of -Laplacian,
// all diagonal in the sine eigenbasis.

#include "core/spectral.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>

namespace bbgp {

enum class KernelFamily { Bridge, Helmholtz, Power };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

/// Truncation used when a spec does not set one: 512, 64, 32 for d = 1, 2, 3.
int default_order(int dim);

struct KernelSpec {
    KernelFamily family = KernelFamily::Bridge;
    int dim = 1;
    int order = 512;
    double beta = 1.0;   // inverse variance scale, applied at covariance level
    double omega = 0.0;  // helmholtz only
    double p = 1.0;      // power only

    static KernelSpec bridge(int dim, double beta = 1.0, int order = 0);
    static KernelSpec helmholtz(double omega, double beta = 1.0, int order = 0);
    static KernelSpec power(double p, double beta = 1.0, int order = 0);

    [[nodiscard]] KernelSpec with_beta(double b) const;

    /// Throws InvalidArgument, ResourceLimit, or NumericalError (exact resonance).
    void validate() const;
};

/// Eigenvalue of the unit-beta kernel for `alpha`.
double eigenvalue(const KernelSpec& spec, const MultiIndex& alpha);

/// All S^d eigenvalues in canonical order.
Eigen::VectorXd eigenvalues(const KernelSpec& spec);

/// Truncated Mercer sum beta^{-1} sum_alpha lambda_alpha psi_alpha(x) psi_alpha(x').
double mercer_sum(const KernelSpec& spec, std::span<const double> x, std::span<const double> xp);

/// Closed form for the 1D bridge, truncated Mercer sum otherwise.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> xp);
inline double kernel_eval(const KernelSpec& spec, double x, double xp) {
    return kernel_eval(spec, std::span<const double>(&x, 1), std::span<const double>(&xp, 1));
}

Eigen::MatrixXd gram(const KernelSpec& spec, const PointList& points);
Eigen::VectorXd kernel_cross(const KernelSpec& spec, std::span<const double> x, const PointList& points);
/// Rows index `a`, columns index `b`.
Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const PointList& a, const PointList& b);

/// sum_alpha c_alpha^2 / lambda_alpha, beta excluded.
double rkhs_sq_norm(const KernelSpec& spec, const SpectralField& u);

}  // namespace bbgp
