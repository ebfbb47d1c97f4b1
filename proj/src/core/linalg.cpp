#include "core/linalg.hpp"

#include "core/error.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace bbgp {
namespace {

bool usable(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const auto diag = llt.matrixLLT().diagonal();
    return (diag.array() > 0.0).all() && diag.allFinite();
}

}  // namespace

SpdFactor::SpdFactor(const Eigen::MatrixXd& a, std::string_view context) {
    require(a.rows() == a.cols() && a.rows() > 0, std::string(context) + ": matrix must be square and non-empty");
    if (!a.allFinite()) throw NumericalError(std::string(context) + ": matrix has non-finite entries");
    llt_.compute(a);
    if (usable(llt_)) return;

    const double n = static_cast<double>(a.rows());
    jitter_ = 1e-12 * std::abs(a.trace()) / n;
    std::ostringstream msg;
    msg << context << ": non-positive pivot, adding diagonal jitter " << jitter_;
    log(LogLevel::Warning, msg.str());
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter_;
    llt_.compute(shifted);
    if (!usable(llt_)) throw NumericalError(std::string(context) + ": matrix is singular after jitter");
}

double SpdFactor::log_determinant() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

}  // namespace bbgp
