#include "core/sampling.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include <algorithm>
#include <cmath>

namespace bbgp {

PriorSampler::PriorSampler(KernelSpec spec, SpectralField mean, Eigen::Index mesh_size, std::uint64_t seed)
    : spec_(std::move(spec)), mean_(std::move(mean)), mesh_size_(mesh_size), seed_(seed) {
    spec_.validate();
    require(mean_.dim() == spec_.dim && mean_.order() == spec_.order, "sampler mean truncation does not match the kernel");
    require(mesh_size_ >= 1 && mesh_size_ <= mean_.coeffs().size(), "mesh size must lie in [1, S^d]");
    variances_ = eigenvalues(spec_).head(mesh_size_) / spec_.beta;
    stddev_ = variances_.cwiseSqrt();
}

PriorSampler PriorSampler::power_version(double p, int order, Eigen::Index mesh_size, std::uint64_t seed) {
    require(p > 0.5 && p < 1.0, "power version sampling needs 1/2 < p < 1");
    const KernelSpec spec = KernelSpec::power(p, 1.0, order);
    return PriorSampler(spec, SpectralField(1, spec.order), mesh_size, seed);
}

Eigen::VectorXd PriorSampler::draw_coefficients(std::uint64_t index) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(mean_.coeffs().size());
    for (Eigen::Index k = 0; k < mesh_size_; ++k)
        c(k) = mean_.coeffs()(k) + stddev_(k) * random::normal(seed_, index, static_cast<std::uint64_t>(k));
    return c;
}

SpectralField PriorSampler::draw(std::uint64_t index) const {
    return SpectralField(spec_.dim, spec_.order, draw_coefficients(index));
}

Eigen::MatrixXd PriorSampler::sample_at(const PointList& points, std::size_t count, std::uint64_t first) const {
    const Eigen::MatrixXd phi = basis_matrix(spec_.dim, spec_.order, points).leftCols(mesh_size_);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(points.size()));
    constexpr std::size_t chunk = 512;
    Eigen::MatrixXd block;
    for (std::size_t start = 0; start < count; start += chunk) {
        const std::size_t len = std::min(chunk, count - start);
        block.resize(mesh_size_, static_cast<Eigen::Index>(len));
        for (std::size_t j = 0; j < len; ++j)
            block.col(static_cast<Eigen::Index>(j)) = draw_coefficients(first + start + j).head(mesh_size_);
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) = (phi * block).transpose();
    }
    return out;
}

std::vector<SpectralField> sample(const PriorSampler& sampler, std::size_t count) {
    require(count >= 1, "sample count must be >= 1");
    std::vector<SpectralField> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw(i));
    return out;
}

std::vector<SpectralField> sample_power_version(double p, int order, Eigen::Index mesh_size, std::uint64_t seed,
                                                std::size_t count) {
    return sample(PriorSampler::power_version(p, order, mesh_size, seed), count);
}

NestedConsistencyReport nested_consistency(const PriorSampler& small, const PriorSampler& large, std::size_t draws) {
    const KernelSpec& a = small.spec();
    const KernelSpec& b = large.spec();
    require(a.family == b.family && a.dim == b.dim && a.order == b.order && a.beta == b.beta && a.omega == b.omega &&
                a.p == b.p,
            "nested meshes must share the kernel");
    require(small.mesh_size() <= large.mesh_size(), "the small mesh must be a prefix of the large mesh");
    require(small.mean().coeffs() == large.mean().coeffs(), "nested meshes must share the prior mean");
    require(draws >= 2, "Monte-Carlo check needs at least two draws");

    const Eigen::Index m = small.mesh_size();
    NestedConsistencyReport report;
    report.draws = draws;
    const Eigen::VectorXd block = large.prior_variances().head(m);
    report.analytic_max_diff = (block - small.prior_variances()).cwiseAbs().maxCoeff();
    report.analytic_equal = (block.array() == small.prior_variances().array()).all();

    Eigen::MatrixXd samples(m, static_cast<Eigen::Index>(draws));
    for (std::size_t i = 0; i < draws; ++i)
        samples.col(static_cast<Eigen::Index>(i)) = large.draw_coefficients(i).head(m);
    const Eigen::VectorXd mean = samples.rowwise().mean();
    const Eigen::MatrixXd centered = samples.colwise() - mean;
    const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(draws - 1);
    const Eigen::MatrixXd expected = small.prior_variances().asDiagonal();
    report.mc_max_deviation = (cov - expected).cwiseAbs().maxCoeff();
    report.mc_tolerance = 4.0 / std::sqrt(static_cast<double>(draws)) * small.prior_variances().maxCoeff();
    return report;
}

}  // namespace bbgp
