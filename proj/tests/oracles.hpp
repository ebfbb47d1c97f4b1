#pragma once

// Reference computations that share no code with the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// Second-order central differences for -u'' = f on [0,1], u(0) = u(1) = 0,
/// with `n` interior nodes x_i = i / (n + 1). Thomas algorithm.
inline std::vector<double> fd_poisson(const std::function<double(double)>& f, int n) {
    const double h = 1.0 / (n + 1);
    std::vector<double> c(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
    double prev_c = 0.0, prev_d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double rhs = h * h * f((i + 1) * h);
        const double denom = 2.0 + prev_c;  // a = -1, b = 2
        c[static_cast<std::size_t>(i)] = -1.0 / denom;
        d[static_cast<std::size_t>(i)] = (rhs + prev_d) / denom;
        prev_c = c[static_cast<std::size_t>(i)];
        prev_d = d[static_cast<std::size_t>(i)];
    }
    std::vector<double> u(static_cast<std::size_t>(n));
    double next = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        next = d[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)] * next;
        u[static_cast<std::size_t>(i)] = next;
    }
    return u;
}

/// log N(y | mean, cov) through a dense LU factorization.
inline double log_gaussian(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(cov);
    const Eigen::VectorXd r = y - mean;
    double logdet = 0.0;
    const Eigen::MatrixXd U = lu.matrixLU().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < U.rows(); ++i) logdet += std::log(std::abs(U(i, i)));
    return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * pi) + logdet + r.dot(lu.solve(r)));
}

/// Brownian bridge covariance min(x, x') - x x'.
inline double bridge(double x, double xp) { return std::min(x, xp) - x * xp; }

/// Two-sample Kolmogorov-Smirnov p-value from the asymptotic distribution.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double dmax = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        dmax = std::max(dmax, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * dmax;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(q, 0.0, 1.0);
}

}  // namespace oracle
