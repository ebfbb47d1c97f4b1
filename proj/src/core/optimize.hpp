#pragma once

#include <Eigen/Dense>

#include <functional>

namespace bbgp {

enum class BracketBoundary { None, Lower, Upper };

struct ScalarMaximum {
    double x = 0.0;
    double value = 0.0;
    BracketBoundary boundary = BracketBoundary::None;
    int evaluations = 0;
};

/// Maximizes f on [lo, hi]: a uniform scan with `grid_points` nodes locates
/// the best cell, then golden-section search refines it to `tol`. When the
/// scan maximum sits on an end of the bracket the end point is returned and
/// flagged.
ScalarMaximum maximize_bracketed(const std::function<double(double)>& f, double lo, double hi, double tol,
                                 int grid_points = 97);

struct LeastSquaresOptions {
    double gradient_tol = 1e-8;
    int max_iterations = 500;
};

struct LeastSquaresResult {
    Eigen::VectorXd x;
    double objective = 0.0;  // 1/2 ||r||^2
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt minimization of 1/2 ||r(x)||^2.
LeastSquaresResult minimize_least_squares(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                          const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                                          Eigen::VectorXd x0, const LeastSquaresOptions& options = {});

/// Central-difference Jacobian of f at x.
Eigen::MatrixXd finite_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double relative_step = 1e-6);

}  // namespace bbgp
