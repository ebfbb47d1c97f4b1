#include "core/error.hpp"
#include "core/pde.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bbgp;
using oracle::pi;

namespace {
SourceModel expr(const char* text, int dim = 1) { return SourceModel::closed_form(Expression::parse(text, dim)); }

SpectralField random_field(std::mt19937_64& rng, int dim, int order) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd c(static_cast<Eigen::Index>(coefficient_count(dim, order)));
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = n(rng) / (1.0 + k);
    return SpectralField(dim, order, c);
}
}  // namespace

TEST_CASE("solve on eigenfunction and zero sources") {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 64);
    const PdeSolution s = solve(SourceModel::spectral(pi * pi * SpectralField::basis_function(1, 64, {{1}})), spec);
    const SpectralField psi1 = SpectralField::basis_function(1, 64, {{1}});
    CHECK((s.u0.coeffs() - psi1.coeffs()).cwiseAbs().maxCoeff() < 1e-14);

    const PdeSolution e = solve(expr("pi^2 * sin(pi*x)"), spec);
    for (double x : {0.1, 0.5, 0.77}) CHECK(std::abs(e.u0(x) - std::sin(pi * x)) < 1e-10);

    CHECK(solve(expr("0"), spec).u0.coeffs().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve matches a finite-difference Poisson solve") {
    const auto f = [](double x) { return 10.0 * std::exp(-(x - 0.25) * (x - 0.25)); };
    const int n = 4095;  // 4096 intervals
    const std::vector<double> fd = oracle::fd_poisson(f, n);
    const PdeSolution s = solve(expr("10*exp(-(x-0.25)^2)"), KernelSpec::bridge(1));
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(s.u0((i + 1.0) / (n + 1)) - fd[static_cast<std::size_t>(i)]));
    CHECK(worst < 1e-4);
}

TEST_CASE("spectral residual vanishes for band-limited sources") {
    std::mt19937_64 rng(3);
    for (int dim = 1; dim <= 3; ++dim) {
        const int order = dim == 3 ? 6 : 12;
        const KernelSpec spec = KernelSpec::bridge(dim, 1.0, order);
        const SpectralField q = random_field(rng, dim, order);
        const PdeSolution s = solve(SourceModel::spectral(q), spec);
        const auto idx = enumerate_indices(dim, order);
        double worst = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double laplacian = pi * pi * static_cast<double>(idx[k].squared_norm()) * s.u0.coeffs()(static_cast<Eigen::Index>(k));
            worst = std::max(worst, std::abs(laplacian - q.coeffs()(static_cast<Eigen::Index>(k))));
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("solve is linear in the source") {
    std::mt19937_64 rng(5);
    const KernelSpec spec = KernelSpec::helmholtz(1.3, 1.0, 40);
    const SpectralField q1 = random_field(rng, 1, 40), q2 = random_field(rng, 1, 40);
    const SpectralField lhs = solve(SourceModel::spectral(2.5 * q1 + (-0.75) * q2), spec).u0;
    const SpectralField rhs = 2.5 * solve(SourceModel::spectral(q1), spec).u0 + (-0.75) * solve(SourceModel::spectral(q2), spec).u0;
    CHECK((lhs.coeffs() - rhs.coeffs()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("resonant helmholtz solve is rejected") {
    CHECK_THROWS_AS(solve(expr("1"), KernelSpec::helmholtz(2 * pi, 1.0, 8)), NumericalError);
}

TEST_CASE("energy") {
    const SourceModel q0 = expr("0");
    const SpectralField psi1 = SpectralField::basis_function(1, 16, {{1}});
    CHECK(energy(SpectralField(1, 16), q0) == 0.0);
    CHECK(energy(psi1, q0) == doctest::Approx(pi * pi / 2).epsilon(1e-14));

    const SourceModel q = SourceModel::spectral(pi * pi * psi1);
    const PdeSolution s = solve(q, KernelSpec::bridge(1, 1.0, 16));
    CHECK(energy(s.u0, q) == doctest::Approx(-pi * pi / 2).epsilon(1e-13));
    CHECK_THROWS_AS(energy(psi1, expr("1/(x-x)")), NumericalError);
}

TEST_CASE("energy_rkhs_shift") {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 16);
    const SourceModel q = expr("exp(x) - 3*x");
    const PdeSolution s = solve(q, spec);
    CHECK(energy_rkhs_shift(s.u0, q, spec) == doctest::Approx(0.0));
    const SpectralField shifted = s.u0 + SpectralField::basis_function(1, 16, {{1}});
    CHECK(energy_rkhs_shift(shifted, q, spec) == doctest::Approx(pi * pi / 2).epsilon(1e-12));
    CHECK_THROWS_AS(energy_rkhs_shift(s.u0, q, KernelSpec::helmholtz(1.0, 1.0, 16)), InvalidArgument);
}

TEST_CASE("energy equals the shifted RKHS objective minus half the source energy") {
    std::mt19937_64 rng(11);
    for (int dim = 1; dim <= 2; ++dim) {
        const int order = dim == 1 ? 24 : 8;
        const KernelSpec spec = KernelSpec::bridge(dim, 1.0, order);
        const SourceModel q = SourceModel::spectral(random_field(rng, dim, order));
        for (int trial = 0; trial < 10; ++trial) {
            const SpectralField u = random_field(rng, dim, order);
            const double gap = energy(u, q) - energy_rkhs_shift(u, q, spec) + half_source_energy(q, spec);
            CHECK(std::abs(gap) < 1e-8);
        }
    }
}

TEST_CASE("the PDE solution is the energy minimizer") {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 20);
    const SourceModel q = expr("10*exp(-(x-0.25)^2)");
    const SpectralField u0 = solve(q, spec).u0;
    const double h = 1e-4;
    for (int k = 1; k <= 20; ++k) {
        const SpectralField e = SpectralField::basis_function(1, 20, {{k}});
        const double g = (energy(u0 + h * e, q) - energy(u0 + (-h) * e, q)) / (2 * h);
        CHECK(std::abs(g) < 1e-8);
    }
}

TEST_CASE("closed-form sources with parameters") {
    const SourceModel fam = SourceModel::closed_form(Expression::parse("theta1 * sin(pi*x) + theta2", 1), {2.0, 0.0});
    CHECK(fam.parameter_count() == 2);
    const SourceModel other = fam.with_theta({0.0, 1.0});
    CHECK(other(std::vector<double>{0.3}) == 1.0);
    CHECK(fam(std::vector<double>{0.5}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(fam.with_theta({1.0}), InvalidArgument);
}
