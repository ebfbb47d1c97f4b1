#include "core/optimize.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bbgp {

ScalarMaximum maximize_bracketed(const std::function<double(double)>& f, double lo, double hi, double tol,
                                 int grid_points) {
    require(hi > lo && grid_points >= 3, "invalid search bracket");
    ScalarMaximum out;
    std::vector<double> xs(static_cast<std::size_t>(grid_points)), fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        fs[i] = f(xs[i]);
        if (std::isnan(fs[i])) throw NumericalError("objective is NaN at " + std::to_string(xs[i]));
    }
    out.evaluations = grid_points;
    const auto best = static_cast<std::size_t>(std::max_element(fs.begin(), fs.end()) - fs.begin());
    if (best == 0 || best + 1 == xs.size()) {
        out.x = xs[best];
        out.value = fs[best];
        out.boundary = best == 0 ? BracketBoundary::Lower : BracketBoundary::Upper;
        return out;
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = xs[best - 1], b = xs[best + 1];
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    out.evaluations += 2;
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++out.evaluations;
    }
    out.x = 0.5 * (a + b);
    out.value = f(out.x);
    ++out.evaluations;
    if (fs[best] > out.value) {
        out.x = xs[best];
        out.value = fs[best];
    }
    return out;
}

LeastSquaresResult minimize_least_squares(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                          const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                                          Eigen::VectorXd x0, const LeastSquaresOptions& options) {
    LeastSquaresResult out;
    out.x = std::move(x0);
    Eigen::VectorXd r = residual(out.x);
    if (!r.allFinite()) throw NumericalError("least-squares residual is not finite at the initial point");
    out.objective = 0.5 * r.squaredNorm();
    double mu = 1e-3;
    for (; out.iterations < options.max_iterations; ++out.iterations) {
        const Eigen::MatrixXd j = jacobian(out.x);
        const Eigen::VectorXd g = j.transpose() * r;
        out.gradient_norm = g.norm();
        if (out.gradient_norm < options.gradient_tol) {
            out.converged = true;
            return out;
        }
        const Eigen::MatrixXd h = j.transpose() * j;
        const double scale = std::max(1.0, h.diagonal().maxCoeff());
        bool stepped = false;
        while (!stepped) {
            Eigen::MatrixXd damped = h;
            damped.diagonal().array() += mu * scale;
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            const Eigen::VectorXd trial = out.x + step;
            const Eigen::VectorXd rt = residual(trial);
            const double ft = rt.allFinite() ? 0.5 * rt.squaredNorm() : INFINITY;
            if (ft <= out.objective) {
                out.x = trial;
                r = rt;
                const double decrease = out.objective - ft;
                out.objective = ft;
                mu = std::max(mu / 3.0, 1e-15);
                stepped = true;
                if (decrease == 0.0 && step.norm() <= 1e-15 * (1.0 + out.x.norm())) {
                    // no further progress is representable
                    out.gradient_norm = (jacobian(out.x).transpose() * r).norm();
                    out.converged = out.gradient_norm < options.gradient_tol;
                    ++out.iterations;
                    return out;
                }
            } else {
                mu *= 4.0;
                if (mu > 1e20) {
                    out.gradient_norm = g.norm();
                    return out;
                }
            }
        }
    }
    out.gradient_norm = (jacobian(out.x).transpose() * r).norm();
    out.converged = out.gradient_norm < options.gradient_tol;
    return out;
}

Eigen::MatrixXd finite_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double relative_step) {
    Eigen::MatrixXd jac;
    Eigen::VectorXd xp = x, xm = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = relative_step * std::max(1.0, std::abs(x(k)));
        xp(k) = x(k) + h;
        xm(k) = x(k) - h;
        const Eigen::VectorXd col = (f(xp) - f(xm)) / (2.0 * h);
        if (k == 0) jac.resize(col.size(), x.size());
        jac.col(k) = col;
        xp(k) = xm(k) = x(k);
    }
    return jac;
}

}  // namespace bbgp
