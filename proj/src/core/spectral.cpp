#include "core/spectral.hpp"

#include "core/error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace bbgp {
namespace {

// Applies a (rows x n) matrix along one axis of a tensor with shape
// (outer, n, inner), producing (outer, rows, inner).
std::vector<double> contract_axis(const Eigen::MatrixXd& m, const std::vector<double>& in,
                                  std::size_t outer, std::size_t inner) {
    const auto n = static_cast<std::size_t>(m.cols());
    const auto rows = static_cast<std::size_t>(m.rows());
    std::vector<double> out(outer * rows * inner, 0.0);
    for (std::size_t a = 0; a < outer; ++a) {
        for (std::size_t r = 0; r < rows; ++r) {
            double* dst = &out[(a * rows + r) * inner];
            for (std::size_t j = 0; j < n; ++j) {
                const double w = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
                const double* src = &in[(a * n + j) * inner];
                for (std::size_t b = 0; b < inner; ++b) dst[b] += w * src[b];
            }
        }
    }
    return out;
}

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

long long MultiIndex::squared_norm() const {
    long long s = 0;
    for (int k : n) s += static_cast<long long>(k) * k;
    return s;
}

std::size_t coefficient_count(int dim, int order) {
    require(dim >= 1, "dimension must be >= 1, got " + std::to_string(dim));
    require(order >= 1, "truncation order must be >= 1, got " + std::to_string(order));
    if (dim > kMaxDim) throw ResourceLimit("dimension " + std::to_string(dim) + " exceeds maximum of 3");
    double count = std::pow(static_cast<double>(order), dim);
    if (count > static_cast<double>(kMaxCoefficients))
        throw ResourceLimit("order " + std::to_string(order) + " in dimension " + std::to_string(dim) +
                            " needs " + std::to_string(static_cast<long long>(count)) +
                            " coefficients; the dense budget is " + std::to_string(kMaxCoefficients));
    return ipow(static_cast<std::size_t>(order), dim);
}

std::vector<MultiIndex> enumerate_indices(int dim, int order) {
    const std::size_t count = coefficient_count(dim, order);
    std::vector<MultiIndex> out;
    out.reserve(count);
    MultiIndex alpha{std::vector<int>(static_cast<std::size_t>(dim), 1)};
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(alpha);
        for (int axis = dim - 1; axis >= 0; --axis) {
            auto& v = alpha.n[static_cast<std::size_t>(axis)];
            if (v < order) {
                ++v;
                break;
            }
            v = 1;
        }
    }
    return out;
}

std::size_t linear_index(const MultiIndex& alpha, int order) {
    std::size_t k = 0;
    for (int v : alpha.n) {
        require(v >= 1 && v <= order, "multi-index entry " + std::to_string(v) + " outside [1, " +
                                          std::to_string(order) + "]");
        k = k * static_cast<std::size_t>(order) + static_cast<std::size_t>(v - 1);
    }
    return k;
}

double sinpi(double t) {
    double r = std::fmod(t, 2.0);
    if (r < 0) r += 2.0;
    if (r == 0.0 || r == 1.0) return 0.0;
    if (r == 0.5) return 1.0;
    if (r == 1.5) return -1.0;
    // reflect into [-1/2, 1/2] for accuracy near the zeros
    if (r > 1.5) return std::sin(std::numbers::pi * (r - 2.0));
    if (r > 0.5) return std::sin(std::numbers::pi * (1.0 - r));
    return std::sin(std::numbers::pi * r);
}

void check_in_cube(std::span<const double> x, int dim) {
    require(static_cast<int>(x.size()) == dim, "point has " + std::to_string(x.size()) +
                                                   " coordinates, expected " + std::to_string(dim));
    for (double v : x)
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                "point coordinate " + std::to_string(v) + " outside the unit cube");
}

double basis_eval(const MultiIndex& alpha, std::span<const double> x) {
    require(alpha.dim() >= 1, "empty multi-index");
    check_in_cube(x, alpha.dim());
    double r = 1.0;
    for (std::size_t i = 0; i < alpha.n.size(); ++i) {
        require(alpha.n[i] >= 1, "multi-index entries must be >= 1");
        r *= std::numbers::sqrt2 * sinpi(alpha.n[i] * x[i]);
    }
    return r;
}

Eigen::VectorXd axis_basis(int order, double x) {
    Eigen::VectorXd v(order);
    for (int n = 1; n <= order; ++n) v(n - 1) = std::numbers::sqrt2 * sinpi(n * x);
    return v;
}

// ---------------------------------------------------------------------------

QuadratureRule QuadratureRule::gauss_legendre(int dim, int nodes_per_axis) {
    require(dim >= 1 && dim <= kMaxDim, "quadrature dimension must be in [1, 3]");
    require(nodes_per_axis >= 1, "quadrature needs at least one node per axis");
    const int n = nodes_per_axis;
    std::vector<double> nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n));
    // Legendre P_n and its derivative by the three-term recurrence
    auto legendre = [n](double z) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (z * p1 - p0) / (z * z - 1.0);
        return std::pair{p1, dp};
    };
    // roots are symmetric, so only half are found by Newton
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(z);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double dp = legendre(z).second;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        nodes[lo] = 0.5 * (1.0 - z);
        nodes[hi] = 0.5 * (1.0 + z);
        weights[lo] = weights[hi] = 0.5 * w;
    }
    if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.5;
    return QuadratureRule(dim, std::move(nodes), std::move(weights));
}

QuadratureRule QuadratureRule::for_order(int dim, int order) {
    require(order >= 1, "truncation order must be >= 1");
    return gauss_legendre(dim, 2 * order + 24);
}

std::size_t QuadratureRule::size() const { return ipow(nodes_.size(), dim_); }

std::vector<double> QuadratureRule::sample(const ScalarFunction& f) const {
    const std::size_t n = nodes_.size();
    const std::size_t total = size();
    std::vector<double> out(total);
    std::vector<double> x(static_cast<std::size_t>(dim_));
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rem = k;
        for (int axis = dim_ - 1; axis >= 0; --axis) {
            x[static_cast<std::size_t>(axis)] = nodes_[rem % n];
            rem /= n;
        }
        out[k] = f(x);
    }
    return out;
}

double QuadratureRule::integrate_samples(std::span<const double> values) const {
    const std::size_t n = nodes_.size();
    require(values.size() == size(), "sample count does not match quadrature size");
    double total = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::size_t rem = k;
        double w = 1.0;
        for (int axis = 0; axis < dim_; ++axis) {
            w *= weights_[rem % n];
            rem /= n;
        }
        total += w * values[k];
    }
    return total;
}

double QuadratureRule::integrate(const ScalarFunction& f) const { return integrate_samples(sample(f)); }

// ---------------------------------------------------------------------------

SpectralField::SpectralField(int dim, int order)
    : dim_(dim), order_(order), coeffs_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coefficient_count(dim, order)))) {}

SpectralField::SpectralField(int dim, int order, Eigen::VectorXd coeffs)
    : dim_(dim), order_(order), coeffs_(std::move(coeffs)) {
    const std::size_t count = coefficient_count(dim, order);
    require(static_cast<std::size_t>(coeffs_.size()) == count,
            "coefficient vector has " + std::to_string(coeffs_.size()) + " entries, expected " +
                std::to_string(count));
    require(coeffs_.allFinite(), "spectral coefficients must be finite");
}

SpectralField SpectralField::basis_function(int dim, int order, const MultiIndex& alpha) {
    require(alpha.dim() == dim, "multi-index dimension mismatch");
    SpectralField u(dim, order);
    u.coeffs_(static_cast<Eigen::Index>(linear_index(alpha, order))) = 1.0;
    return u;
}

double SpectralField::coeff(const MultiIndex& alpha) const {
    require(alpha.dim() == dim_, "multi-index dimension mismatch");
    return coeffs_(static_cast<Eigen::Index>(linear_index(alpha, order_)));
}

double SpectralField::operator()(std::span<const double> x) const {
    check_in_cube(x, dim_);
    const Eigen::Index s = order_;
    if (dim_ == 1) return axis_basis(order_, x[0]).dot(coeffs_);
    if (dim_ == 2) {
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(
            coeffs_.data(), s, s);
        return axis_basis(order_, x[0]).dot(c * axis_basis(order_, x[1]));
    }
    const Eigen::VectorXd b0 = axis_basis(order_, x[0]);
    const Eigen::VectorXd b1 = axis_basis(order_, x[1]);
    const Eigen::VectorXd b2 = axis_basis(order_, x[2]);
    double total = 0.0;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < s; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < s; ++j) {
            row += b1(j) * coeffs_.segment(k, s).dot(b2);
            k += s;
        }
        total += b0(i) * row;
    }
    return total;
}

void SpectralField::check_compatible(const SpectralField& other) const {
    require(dim_ == other.dim_ && order_ == other.order_,
            "spectral fields differ in dimension or order (" + std::to_string(dim_) + "/" +
                std::to_string(order_) + " vs " + std::to_string(other.dim_) + "/" + std::to_string(other.order_) + ")");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    check_compatible(other);
    coeffs_ += other.coeffs_;
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    check_compatible(other);
    coeffs_ -= other.coeffs_;
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    coeffs_ *= s;
    return *this;
}

double evaluate(const SpectralField& u, std::span<const double> x) { return u(x); }

double l2_inner(const SpectralField& u, const SpectralField& v) {
    require(u.dim() == v.dim() && u.order() == v.order(), "l2_inner: dimension or order mismatch");
    return u.coeffs().dot(v.coeffs());
}

double l2_norm(const SpectralField& u) { return std::sqrt(l2_inner(u, u)); }

SpectralField project(const ScalarFunction& f, int dim, int order, const QuadratureRule& rule) {
    const std::size_t count = coefficient_count(dim, order);
    require(rule.dim() == dim, "quadrature rule dimension does not match projection dimension");
    std::vector<double> values = rule.sample(f);
    for (double v : values)
        if (!std::isfinite(v)) throw NumericalError("function is not finite at a quadrature node");

    const auto& nodes = rule.axis_nodes();
    const auto& weights = rule.axis_weights();
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd transform(order, n);
    for (Eigen::Index j = 0; j < n; ++j)
        transform.col(j) = weights[static_cast<std::size_t>(j)] * axis_basis(order, nodes[static_cast<std::size_t>(j)]);

    // contract one axis at a time; the tensor keeps first-axis-slowest layout
    std::size_t nn = nodes.size();
    for (int axis = 0; axis < dim; ++axis) {
        const std::size_t outer = ipow(static_cast<std::size_t>(order), axis);
        const std::size_t inner = ipow(nn, dim - axis - 1);
        values = contract_axis(transform, values, outer, inner);
    }
    Eigen::VectorXd coeffs = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(count));
    return SpectralField(dim, order, std::move(coeffs));
}

SpectralField project(const ScalarFunction& f, int dim, int order) {
    return project(f, dim, order, QuadratureRule::for_order(dim, order));
}

}  // namespace bbgp

namespace bbgp {

Eigen::MatrixXd basis_matrix(int dim, int order, const PointList& points) {
    const auto count = static_cast<Eigen::Index>(coefficient_count(dim, order));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), count);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& x = points[i];
        check_in_cube(x, dim);
        Eigen::VectorXd row = axis_basis(order, x[0]);
        for (int axis = 1; axis < dim; ++axis) {
            const Eigen::VectorXd b = axis_basis(order, x[static_cast<std::size_t>(axis)]);
            Eigen::VectorXd next(row.size() * b.size());
            for (Eigen::Index k = 0; k < row.size(); ++k) next.segment(k * b.size(), b.size()) = row(k) * b;
            row = std::move(next);
        }
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

}  // namespace bbgp
