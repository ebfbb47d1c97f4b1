#include "core/error.hpp"
#include "core/pde.hpp"
#include "core/sampling.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace bbgp;
using oracle::pi;

namespace {

PriorSampler zero_mean(double beta, int order, Eigen::Index mesh, std::uint64_t seed) {
    const KernelSpec spec = KernelSpec::bridge(1, beta, order);
    return PriorSampler(spec, SpectralField(1, order), mesh, seed);
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double var_se = 0.0;  // standard error of the sample variance
};

Moments moments(const Eigen::VectorXd& v) {
    const double n = static_cast<double>(v.size());
    Moments m;
    m.mean = v.mean();
    const Eigen::ArrayXd c = v.array() - m.mean;
    m.var = c.square().sum() / (n - 1);
    const double m4 = c.pow(4).sum() / n;
    m.var_se = std::sqrt((m4 - m.var * m.var) / n);
    return m;
}

}  // namespace

TEST_CASE("bridge prior variance is x(1 - x)") {
    const PriorSampler s = zero_mean(1.0, 512, 512, 42);
    const Eigen::MatrixXd v = s.sample_at({{0.25}, {0.5}, {0.75}}, 100000);
    for (int j = 0; j < 3; ++j) {
        const double x = 0.25 * (j + 1);
        const Moments m = moments(v.col(j));
        // the truncated series is the exact target of the sampler
        double truncated = 0.0;
        for (int n = 1; n <= 512; ++n) truncated += 2.0 * std::pow(std::sin(n * pi * x), 2) / (n * n * pi * pi);
        CHECK(std::abs(m.var - x * (1 - x)) < 3 * m.var_se);
        CHECK(std::abs(truncated - x * (1 - x)) < 1e-3);
    }
}

TEST_CASE("empirical mean converges to the prior mean") {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 256);
    const PdeSolution prior = solve(SourceModel::closed_form(Expression::parse("10*exp(-(x-0.25)^2)", 1)), spec);
    const PriorSampler s(spec, prior.u0, 256, 5);
    const PointList pts{{0.1}, {0.3}, {0.6}, {0.9}};
    const Eigen::MatrixXd v = s.sample_at(pts, 20000);
    for (int j = 0; j < 4; ++j) {
        const double sd = std::sqrt(pts[static_cast<std::size_t>(j)][0] * (1 - pts[static_cast<std::size_t>(j)][0]));
        CHECK(std::abs(v.col(j).mean() - prior.u0(pts[static_cast<std::size_t>(j)])) < 3 * sd / std::sqrt(20000.0));
    }
}

TEST_CASE("large beta collapses the samples onto the mean") {
    const KernelSpec spec = KernelSpec::bridge(1, 1e6, 64);
    const SpectralField mean = SpectralField::basis_function(1, 64, {{2}});
    const PriorSampler s(spec, mean, 64, 3);
    int close = 0, total = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const Eigen::VectorXd c = s.draw_coefficients(i);
        for (Eigen::Index k = 0; k < c.size(); ++k, ++total) close += std::abs(c(k) - mean.coeffs()(k)) < 0.01;
    }
    CHECK(close >= 0.99 * total);
}

TEST_CASE("draws are deterministic and independent of draw order") {
    const PriorSampler a = zero_mean(1.0, 32, 32, 99);
    const PriorSampler b = zero_mean(1.0, 32, 32, 99);
    const PriorSampler c = zero_mean(1.0, 32, 32, 100);
    CHECK(a.draw_coefficients(7) == b.draw_coefficients(7));
    CHECK(a.draw_coefficients(7) != c.draw_coefficients(7));
    const Eigen::MatrixXd block = a.sample_at({{0.3}}, 10, 5);
    CHECK(block(2, 0) == doctest::Approx(a.draw(7)(std::vector<double>{0.3})).epsilon(1e-13));
    const auto list = sample(a, 3);
    REQUIRE(list.size() == 3);
    CHECK(list[1].coeffs() == a.draw_coefficients(1));
    CHECK_THROWS_AS(sample(a, 0), InvalidArgument);
}

TEST_CASE("samples vanish on the boundary and beyond the mesh") {
    const PriorSampler s = zero_mean(1.0, 64, 20, 1);
    const Eigen::MatrixXd v = s.sample_at({{0.0}, {1.0}}, 50);
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd c = s.draw_coefficients(0);
    CHECK(c.tail(44).cwiseAbs().maxCoeff() == 0.0);
    const PriorSampler s2(KernelSpec::bridge(2, 1.0, 8), SpectralField(2, 8), 64, 1);
    CHECK(s2.draw(3)(std::vector<double>{0.4, 1.0}) == 0.0);
}

TEST_CASE("quadrupling beta halves the standard deviation") {
    const PointList pts{{0.2}, {0.5}, {0.85}};
    const Eigen::MatrixXd a = zero_mean(1.0, 128, 128, 8).sample_at(pts, 40000);
    const Eigen::MatrixXd b = zero_mean(4.0, 128, 128, 9).sample_at(pts, 40000);
    for (int j = 0; j < 3; ++j) {
        const Moments ma = moments(a.col(j)), mb = moments(b.col(j));
        const double ratio = std::sqrt(mb.var / ma.var);
        // delta-method error of the ratio of two independent standard deviations
        const double se = 0.5 * ratio * std::sqrt(std::pow(ma.var_se / ma.var, 2) + std::pow(mb.var_se / mb.var, 2));
        CHECK(std::abs(ratio - 0.5) < 4 * se);
    }
}

TEST_CASE("power versions") {
    CHECK_THROWS_AS(PriorSampler::power_version(0.5, 64, 64, 1), InvalidArgument);
    CHECK_THROWS_AS(PriorSampler::power_version(1.0, 64, 64, 1), InvalidArgument);
    CHECK_THROWS_AS(PriorSampler::power_version(0.4, 64, 64, 1), InvalidArgument);

    const int order = 512;
    {
        const PriorSampler s = PriorSampler::power_version(0.75, order, order, 11);
        double series = 0.0;
        for (int n = 1; n <= order; ++n) series += 2.0 * std::pow(n * n * pi * pi, -0.75) * std::pow(std::sin(n * pi / 2), 2);
        const Moments m = moments(s.sample_at({{0.5}}, 100000).col(0));
        CHECK(std::abs(m.var - series) < 3 * m.var_se);
        const auto draws = sample_power_version(0.75, order, order, 11, 5);
        for (const auto& u : draws) {
            CHECK(u(std::vector<double>{0.0}) == 0.0);
            CHECK(u(std::vector<double>{1.0}) == 0.0);
        }
    }
    {
        const PriorSampler s = PriorSampler::power_version(0.999, order, order, 12);
        const Moments m = moments(s.sample_at({{0.5}}, 100000).col(0));
        CHECK(std::abs(m.var - 0.25) < 3 * m.var_se + 0.005);
    }
}

TEST_CASE("nested meshes") {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 16);
    const PriorSampler m4(spec, SpectralField(1, 16), 4, 1);
    const PriorSampler m16(spec, SpectralField(1, 16), 16, 2);
    const NestedConsistencyReport same = nested_consistency(m16, m16, 100);
    CHECK(same.analytic_equal);
    CHECK(same.analytic_max_diff == 0.0);
    const NestedConsistencyReport r = nested_consistency(m4, m16, 10000);
    CHECK(r.analytic_equal);
    CHECK(r.mc_tolerance == doctest::Approx(4.0 / (pi * pi) / 100.0));
    CHECK(r.mc_max_deviation < r.mc_tolerance);
    CHECK(r.passed());
    CHECK_THROWS_AS(nested_consistency(m16, m4, 100), InvalidArgument);
    const PriorSampler other(KernelSpec::bridge(1, 2.0, 16), SpectralField(1, 16), 4, 1);
    CHECK_THROWS_AS(nested_consistency(other, m16, 100), InvalidArgument);
}

TEST_CASE("refining the mesh leaves the leading marginals unchanged in distribution") {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 64);
    const PriorSampler coarse(spec, SpectralField(1, 64), 8, 21);
    const PriorSampler fine(spec, SpectralField(1, 64), 64, 22);
    std::vector<double> a, b;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        a.push_back(coarse.draw_coefficients(i)(0));
        b.push_back(fine.draw_coefficients(i)(0));
    }
    CHECK(oracle::ks_two_sample_pvalue(a, b) > 0.01);
}
