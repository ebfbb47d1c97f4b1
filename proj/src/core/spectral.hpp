#pragma once

// Sine eigenbasis of the Dirichlet Laplacian on [0,1]^d.
//
// Multi-indices are enumerated lexicographically with the first axis varying
// slowest; every coefficient vector in the library uses this order, so the
// k-th entry of a coefficient vector of order S is the k-th index returned by
// enumerate_indices(d, S).

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bbgp {

using Point = std::vector<double>;
using PointList = std::vector<Point>;
using ScalarFunction = std::function<double(std::span<const double>)>;

inline constexpr int kMaxDim = 3;
inline constexpr std::size_t kMaxCoefficients = 64 * 64 * 64;

struct MultiIndex {
    std::vector<int> n;

    [[nodiscard]] int dim() const { return static_cast<int>(n.size()); }
    [[nodiscard]] long long squared_norm() const;
    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Number of coefficients S^d; throws ResourceLimit past the dense budget.
std::size_t coefficient_count(int dim, int order);

std::vector<MultiIndex> enumerate_indices(int dim, int order);

/// Position of `alpha` in the canonical enumeration of order `order`.
std::size_t linear_index(const MultiIndex& alpha, int order);

/// sin(pi * t), exactly zero at integers.
double sinpi(double t);

void check_in_cube(std::span<const double> x, int dim);

/// psi_alpha(x) = 2^{d/2} prod_i sin(n_i pi x_i).
double basis_eval(const MultiIndex& alpha, std::span<const double> x);

/// sqrt(2) sin(n pi x) for n = 1..order, at a single coordinate.
Eigen::VectorXd axis_basis(int order, double x);

/// Tensor-product Gauss-Legendre rule on [0,1]^d.
class QuadratureRule {
public:
    static QuadratureRule gauss_legendre(int dim, int nodes_per_axis);
    /// Rule used for projections at truncation `order` (2*order + 24 nodes per axis).
    static QuadratureRule for_order(int dim, int order);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const std::vector<double>& axis_nodes() const { return nodes_; }
    [[nodiscard]] const std::vector<double>& axis_weights() const { return weights_; }
    [[nodiscard]] std::size_t size() const;

    /// Values of f at every tensor node, first axis slowest.
    [[nodiscard]] std::vector<double> sample(const ScalarFunction& f) const;
    [[nodiscard]] double integrate(const ScalarFunction& f) const;
    [[nodiscard]] double integrate_samples(std::span<const double> values) const;

private:
    QuadratureRule(int dim, std::vector<double> nodes, std::vector<double> weights)
        : dim_(dim), nodes_(std::move(nodes)), weights_(std::move(weights)) {}

    int dim_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Band-limited field sum_alpha c_alpha psi_alpha with dense coefficients.
class SpectralField {
public:
    SpectralField(int dim, int order);
    SpectralField(int dim, int order, Eigen::VectorXd coeffs);

    static SpectralField basis_function(int dim, int order, const MultiIndex& alpha);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] const Eigen::VectorXd& coeffs() const { return coeffs_; }
    [[nodiscard]] double coeff(const MultiIndex& alpha) const;

    [[nodiscard]] double operator()(std::span<const double> x) const;
    [[nodiscard]] double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

private:
    void check_compatible(const SpectralField& other) const;

    int dim_;
    int order_;
    Eigen::VectorXd coeffs_;
};

double evaluate(const SpectralField& u, std::span<const double> x);
double l2_inner(const SpectralField& u, const SpectralField& v);
double l2_norm(const SpectralField& u);

/// Quadrature estimate of <f, psi_alpha> for every alpha of order `order`.
SpectralField project(const ScalarFunction& f, int dim, int order, const QuadratureRule& rule);
SpectralField project(const ScalarFunction& f, int dim, int order);

}  // namespace bbgp

namespace bbgp {

/// Rows are points, columns are psi_alpha in canonical order.
Eigen::MatrixXd basis_matrix(int dim, int order, const PointList& points);

}  // namespace bbgp
