#pragma once

// Finite-dimensional prior N(u0_hat, beta^{-1} Sigma_F) on the span F of the
// first M eigenfunctions. Sigma_F is diagonal in the eigenbasis, so draws are
// an exact Karhunen-Loeve expansion: c_alpha = c0_alpha + sqrt(lambda_alpha / beta) xi_alpha.
//
// For d > 1 the bridge kernel is not trace class; draws still converge, but
// only in the distributional sense, not as a Gaussian measure on L^2.

#include "core/kernels.hpp"
#include "core/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bbgp {

class PriorSampler {
public:
    /// `mesh_size` = M, the number of leading canonical coefficients that vary.
    PriorSampler(KernelSpec spec, SpectralField mean, Eigen::Index mesh_size, std::uint64_t seed);

    /// Zero-mean sampler for the p-power kernel, 1/2 < p < 1.
    static PriorSampler power_version(double p, int order, Eigen::Index mesh_size, std::uint64_t seed);

    [[nodiscard]] const KernelSpec& spec() const { return spec_; }
    [[nodiscard]] const SpectralField& mean() const { return mean_; }
    [[nodiscard]] Eigen::Index mesh_size() const { return mesh_size_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    /// Diagonal of beta^{-1} Sigma_F.
    [[nodiscard]] const Eigen::VectorXd& prior_variances() const { return variances_; }

    /// Draw number `index`; independent of any other draw.
    [[nodiscard]] SpectralField draw(std::uint64_t index) const;
    [[nodiscard]] Eigen::VectorXd draw_coefficients(std::uint64_t index) const;

    /// Draws first..first+count-1 evaluated at `points`; rows are draws.
    [[nodiscard]] Eigen::MatrixXd sample_at(const PointList& points, std::size_t count, std::uint64_t first = 0) const;

private:
    KernelSpec spec_;
    SpectralField mean_;
    Eigen::Index mesh_size_;
    std::uint64_t seed_;
    Eigen::VectorXd stddev_;
    Eigen::VectorXd variances_;
};

std::vector<SpectralField> sample(const PriorSampler& sampler, std::size_t count);
std::vector<SpectralField> sample_power_version(double p, int order, Eigen::Index mesh_size, std::uint64_t seed,
                                                std::size_t count);

struct NestedConsistencyReport {
    bool analytic_equal = false;       // leading block of Sigma_F2 equals Sigma_F1 exactly
    double analytic_max_diff = 0.0;
    double mc_max_deviation = 0.0;     // max entrywise |sample cov - Sigma_F1|
    double mc_tolerance = 0.0;         // 4 / sqrt(draws) * largest prior variance
    std::size_t draws = 0;

    [[nodiscard]] bool passed() const { return analytic_equal && mc_max_deviation < mc_tolerance; }
};

NestedConsistencyReport nested_consistency(const PriorSampler& small, const PriorSampler& large, std::size_t draws);

}  // namespace bbgp
