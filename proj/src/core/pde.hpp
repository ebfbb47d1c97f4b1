#pragma once

// Spectral solution of -Laplacian u = q (or the Helmholtz analogue) with
// homogeneous Dirichlet conditions, and the Dirichlet energy in both its
// quadrature and shifted-RKHS forms.

#include "core/expression.hpp"
#include "core/kernels.hpp"
#include "core/spectral.hpp"

#include <memory>
#include <string>
#include <vector>

namespace bbgp {

class SourceModel {
public:
    static SourceModel spectral(SpectralField coeffs);
    static SourceModel closed_form(Expression expr, std::vector<double> theta = {});
    static SourceModel function(ScalarFunction f, int dim, std::string label = "function");

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] bool is_spectral() const { return spectral_ != nullptr; }
    [[nodiscard]] const std::string& label() const { return label_; }

    [[nodiscard]] int parameter_count() const;
    [[nodiscard]] const std::vector<double>& theta() const { return theta_; }
    [[nodiscard]] SourceModel with_theta(std::vector<double> theta) const;

    [[nodiscard]] double operator()(std::span<const double> x) const;

    /// <q, psi_alpha> at truncation `order`; closed forms are projected once
    /// per order and cached.
    [[nodiscard]] SpectralField coefficients(int order) const;
    [[nodiscard]] SpectralField coefficients(int order, const QuadratureRule& rule) const;

private:
    struct Cache;

    SourceModel() = default;

    int dim_ = 1;
    std::string label_;
    std::shared_ptr<const SpectralField> spectral_;
    std::shared_ptr<const Expression> expr_;
    ScalarFunction func_;
    std::vector<double> theta_;
    std::shared_ptr<Cache> cache_;
};

struct PdeSolution {
    SpectralField u0;
    KernelFamily family = KernelFamily::Bridge;
    double omega = 0.0;
};

/// u0 = C q: coefficients lambda_alpha q_alpha with beta excluded.
PdeSolution solve(const SourceModel& q, const KernelSpec& spec);

/// Integral of 1/2 |grad u|^2 - q u; the gradient term is computed spectrally.
double energy(const SpectralField& u, const SourceModel& q, const QuadratureRule& rule);
double energy(const SpectralField& u, const SourceModel& q);

/// 1/2 ||u - C q||^2 in the RKHS of the bridge kernel. Differs from energy()
/// by the u-independent constant 1/2 <q, C q>.
double energy_rkhs_shift(const SpectralField& u, const SourceModel& q, const KernelSpec& spec);

/// 1/2 sum_alpha lambda_alpha q_alpha^2 for the spec truncation.
double half_source_energy(const SourceModel& q, const KernelSpec& spec);

}  // namespace bbgp
