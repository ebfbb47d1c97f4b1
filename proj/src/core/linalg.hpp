#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace bbgp {

/// Cholesky factor of a symmetric positive (semi)definite matrix.
///
/// If the plain factorization hits a non-positive pivot, the diagonal is
/// shifted once by 1e-12 * trace / n and the shift is logged. A second failure
/// raises NumericalError.
class SpdFactor {
public:
    SpdFactor(const Eigen::MatrixXd& a, std::string_view context);

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
    [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt_.solve(b); }
    [[nodiscard]] double log_determinant() const;
    [[nodiscard]] double jitter() const { return jitter_; }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
};

}  // namespace bbgp
