// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance <path-to-bbgp-executable>

#include "cli_support.hpp"
#include "core/harness.hpp"
#include "core/inverse.hpp"
#include "core/pde.hpp"
#include "core/regression.hpp"
#include "core/sampling.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace bbgp;
using oracle::pi;

namespace {

SourceModel expr(const char* text, int dim = 1) { return SourceModel::closed_form(Expression::parse(text, dim)); }

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

struct Outcome {
    bool pass;
    std::string detail;
};

Outcome krr_equivalence() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> nd(5, 50);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = nd(rng);
        const double beta = std::pow(10.0, -1.0 + 2.0 * u(rng));
        const double sigma = std::pow(10.0, -3.0 + 2.0 * u(rng));
        const KernelSpec spec = KernelSpec::bridge(1, beta);
        const PdeSolution prior = solve(expr("2*x + 1"), spec);
        PointList X;
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const double x = 0.01 + 0.98 * u(rng);
            X.push_back({x});
            y(i) = x * (1 - x) * std::exp(x) + sigma * g(rng);
        }
        const PosteriorModel post = condition(spec, prior, Dataset::create(X, y, sigma * sigma));
        // Representer form with the unit bridge kernel, written out independently.
        const double eta = sigma * sigma * beta / n;
        Eigen::MatrixXd K(n, n);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) K(i, j) = oracle::bridge(X[i][0], X[j][0]);
            r(i) = y(i) - prior.u0(X[i]);
        }
        K.diagonal().array() += n * eta;
        const Eigen::VectorXd alpha = K.fullPivLu().solve(r);
        for (int k = 0; k <= 100; ++k) {
            const double x = k / 100.0;
            double krr = prior.u0(std::vector<double>{x});
            for (int i = 0; i < n; ++i) krr += alpha(i) * oracle::bridge(x, X[i][0]);
            worst = std::max(worst, std::abs(post.mean(std::vector<double>{x}) - krr));
        }
    }
    return {worst < 1e-8, fmt("max |m - krr| = %.3g over 50 instances", worst)};
}

SpectralField random_field(std::mt19937_64& rng, int dim, int order) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd c(static_cast<Eigen::Index>(coefficient_count(dim, order)));
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = n(rng) / (1.0 + k);
    return SpectralField(dim, order, c);
}

Outcome energy_identity() {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int dim = trial % 2 ? 2 : 1;
        const int order = dim == 1 ? 32 : 8;
        const KernelSpec spec = KernelSpec::bridge(dim, 1.0, order);
        const SourceModel q = SourceModel::spectral(random_field(rng, dim, order));
        const SpectralField u = random_field(rng, dim, order);
        worst = std::max(worst, std::abs(energy(u, q) - energy_rkhs_shift(u, q, spec) + half_source_energy(q, spec)));
    }
    return {worst < 1e-8, fmt("max gap = %.3g over 100 pairs", worst)};
}

Outcome bridge_variance() {
    const int order = 4096;
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, order);
    const PriorSampler s(spec, SpectralField(1, order), order, 303);
    const Eigen::MatrixXd v = s.sample_at({{0.25}, {0.5}, {0.75}}, 100000);
    bool ok = true;
    double worst = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double x = 0.25 * (j + 1);
        const Eigen::ArrayXd c = v.col(j).array() - v.col(j).mean();
        const double n = static_cast<double>(c.size());
        const double var = c.square().sum() / (n - 1);
        const double se = std::sqrt((c.pow(4).sum() / n - var * var) / n);
        const double z = std::abs(var - x * (1 - x)) / se;
        worst = std::max(worst, z);
        ok = ok && z < 3.0;
    }
    return {ok, fmt("largest deviation %.2f standard errors from 1e5 draws", worst)};
}

Outcome poisson_vs_fd() {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 512);
    const PdeSolution s = solve(expr("10*exp(-(x-0.25)^2)"), spec);
    const int n = 4095;
    const auto fd = oracle::fd_poisson([](double x) { return 10.0 * std::exp(-(x - 0.25) * (x - 0.25)); }, n);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(s.u0(std::vector<double>{(i + 1.0) / (n + 1)}) - fd[static_cast<std::size_t>(i)]));
    return {worst < 1e-4, fmt("max |u0 - fd| = %.3g on 4096 intervals", worst)};
}

Outcome beta_gradient_fd() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const KernelSpec spec = KernelSpec::bridge(1, 1.0, 80);
        const PdeSolution prior = solve(expr("10*exp(-(x-0.25)^2)"), spec);
        const auto m = static_cast<Eigen::Index>(5 + trial);
        const double sigma2 = std::pow(10.0, -6.0 + 4.0 * u(rng));
        const double scale = std::pow(10.0, -2.0 + 2.0 * u(rng));
        Eigen::VectorXd d = prior.u0.coeffs().head(m);
        for (Eigen::Index k = 0; k < m; ++k) d(k) += scale * g(rng) / (k + 1.0);
        const CoefficientData data = CoefficientData::create(d, sigma2);
        const double beta = std::pow(10.0, -2.0 + 4.0 * u(rng));
        const auto L = [&](double b) { return log_marginal(spec, prior, data, b); };
        const double h = 1e-5 * beta;
        const double fd = (L(beta + h) - L(beta - h)) / (2 * h);
        const double grad = beta_gradient(spec, prior, data, beta, HyperPrior::flat());
        worst = std::max(worst, std::abs(grad - fd) / std::abs(grad));
    }
    return {worst < 1e-5, fmt("max relative error %.3g over 50 instances", worst)};
}

Outcome beta_limits() {
    const int m = 2000;
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, m);
    const PdeSolution prior = solve(expr("10*exp(-(x-0.25)^2)"), spec);
    const SpectralField truth = prior.u0 + 1.0 * SpectralField::basis_function(1, m, {{1}});
    const CoefficientData data = CoefficientData::create(truth.coeffs(), 1e-12);
    const double formula = beta_limit_flat(spec, truth, prior.u0, m);
    const BetaEstimate flat = beta_map(spec, prior, data, HyperPrior::flat());
    const BetaEstimate jeff = beta_map(spec, prior, data, HyperPrior::jeffreys());
    const double r1 = flat.beta / formula;
    const double r2 = jeff.beta / flat.beta / ((m - 2.0) / m);
    return {!flat.dirac_limit() && std::abs(r1 - 1) < 0.1 && std::abs(r2 - 1) < 0.01,
            fmt("flat/formula = %.5f, (jeffreys/flat)/((M-2)/M) = %.6f", r1, r2)};
}

Outcome convergence() {
    const ConvergenceReport r = convergence_study(
        [](std::span<const double> x) { return x[0] * (1 - x[0]) * std::exp(x[0]); }, expr("10*exp(-(x-0.25)^2)"),
        KernelSpec::bridge(1, 1.0), {16, 32, 64, 128, 256, 512}, 707);
    bool decreasing = true;
    for (std::size_t i = 1; i < r.rows.size(); ++i) decreasing = decreasing && r.rows[i].l2_error < r.rows[i - 1].l2_error;
    const bool slope_ok = r.error_slope.slope <= -0.9;
    const double var_ratio = r.rows.back().variance_norm / r.rows.front().variance_norm;
    const bool var_ok = var_ratio < 0.05;
    return {decreasing && slope_ok && var_ok,
            std::string("error ") + (decreasing ? "strictly decreasing" : "NOT strictly decreasing") +
                fmt(", slope %.3f; variance norm n=512 / n=16 = %.3f (needs < 0.05)", r.error_slope.slope, var_ratio)};
}

Outcome nested_mesh() {
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 32);
    const PriorSampler small(spec, SpectralField(1, 32), 8, 801);
    const PriorSampler large(spec, SpectralField(1, 32), 32, 802);
    const NestedConsistencyReport r = nested_consistency(small, large, 10000);
    return {r.analytic_equal && r.analytic_max_diff == 0.0 && r.mc_max_deviation < r.mc_tolerance,
            fmt("analytic diff %.3g, MC deviation %.3g", r.analytic_max_diff, r.mc_max_deviation) +
                fmt(" vs tolerance %.3g", r.mc_tolerance)};
}

Outcome inverse_behaviour() {
    const std::vector<SourceModel> basis{expr("sin(pi*x)"), expr("exp(x)"), expr("x^2")};
    const Eigen::Vector3d theta{2.0, -1.0, 0.5};
    const SourceModel truth = expr("2*sin(pi*x) - exp(x) + 0.5*x^2");
    const KernelSpec spec = KernelSpec::bridge(1, 1.0, 128);
    const SpectralField u = solve(truth, spec).u0;

    double recovery = 0.0;
    recovery = std::max(recovery, (invert_source(basis, CoefficientData::create(u.coeffs().head(60), 1e-12),
                                                 HyperPrior::fixed(1.0), spec).theta_mean - theta).cwiseAbs().maxCoeff());
    const KernelSpec point_spec = KernelSpec::bridge(1, 1.0);
    const SpectralField up = solve(truth, point_spec).u0;
    PointList X;
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
        X.push_back({(i + 1.0) / 31});
        y(i) = up(X.back());
    }
    recovery = std::max(recovery, (invert_source(basis, Dataset::create(X, y, 1e-12), HyperPrior::fixed(1.0),
                                                 point_spec).theta_mean - theta).cwiseAbs().maxCoeff());

    std::mt19937_64 rng(909);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd d = u.coeffs().head(40);
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) += 1e-3 * g(rng);
    bool increasing = true, positive = true;
    double prev = 0.0;
    for (double beta : {16.0, 8.0, 4.0, 2.0, 1.0, 0.5}) {
        for (double sigma2 : {1e-6, 1e-10}) {
            const InverseResult r = invert_source(basis, CoefficientData::create(d, sigma2), HyperPrior::fixed(beta), spec);
            positive = positive && Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.theta_cov).eigenvalues().minCoeff() > 0;
            if (sigma2 == 1e-6) {
                increasing = increasing && r.theta_cov.trace() > prev;
                prev = r.theta_cov.trace();
            }
        }
    }
    return {recovery < 1e-6 && increasing && positive,
            fmt("max |theta - theta*| = %.3g; trace ", recovery) + (increasing ? "increases" : "does NOT increase") +
                " as beta falls; covariance " + (positive ? "stays positive definite" : "degenerates")};
}

Outcome determinism(const std::string& cli) {
    clitest::Workspace ws(cli);
    const std::vector<std::pair<std::string, std::string>> runs{
        {"solve", R"j({"source": "10*exp(-(x-0.25)^2)", "seed": 11})j"},
        {"sample", R"j({"source": "10*exp(-(x-0.25)^2)", "betas": [0.1, 1, 10, 100], "draws": 3, "moment_draws": 1000, "seed": 11})j"},
        {"fit", R"j({"data": {"truth": "x*(1-x)*exp(x)", "n": 25, "design": "random", "noise_sd": 0.01}, "seed": 11})j"},
        {"beta", R"j({"kernel": {"order": 500}, "data": {"kind": "coefficients", "epsilon": 1, "noise": true}, "seed": 11})j"},
        {"invert", R"j({"data": {"truth": "x*(1-x)", "n": 30, "noise_sd": 0.001}, "basis": ["1", "x"], "seed": 11})j"},
        {"study convergence", R"j({"noisy": true, "seed": 11})j"},
        {"study model-error", R"j({"kernel": {"order": 500}, "observed": 500, "noisy": true, "seed": 11})j"},
    };
    int identical = 0, total = 0;
    std::string failed;
    for (const auto& [sub, json] : runs) {
        for (const char* format : {"csv", "json"}) {
            ++total;
            const auto cfg = ws.config("run.json", json);
            const auto a = ws.dir / "a", b = ws.dir / "b";
            const int ra = ws.run(sub, cfg, a, std::string("--format ") + format);
            const int rb = ws.run(sub, cfg, b, std::string("--format ") + format);
            if (ra == 0 && rb == 0 && clitest::read_file(a) == clitest::read_file(b) && !clitest::read_file(a).empty())
                ++identical;
            else
                failed += " " + sub + "/" + format;
        }
    }
    return {identical == total, std::to_string(identical) + "/" + std::to_string(total) + " runs byte-identical" +
                                    (failed.empty() ? "" : ";" + failed)};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <bbgp executable>\n");
        return 2;
    }
    const std::string cli = argv[1];
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"KRR and GP posterior mean agree", krr_equivalence},
        {"energy identity", energy_identity},
        {"Brownian bridge variance", bridge_variance},
        {"spectral Poisson solve vs finite differences", poisson_vs_fd},
        {"beta gradient vs finite differences", beta_gradient_fd},
        {"beta MAP limits", beta_limits},
        {"convergence under model error", convergence},
        {"nested-mesh consistency", nested_mesh},
        {"inverse-problem behaviour", inverse_behaviour},
        {"CLI determinism", [&cli] { return determinism(cli); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o{false, ""};
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
