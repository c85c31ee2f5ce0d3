#pragma once

#include <memory>
#include <optional>

#include "rdlab/fft.hpp"
#include "rdlab/grid.hpp"
#include "rdlab/potential.hpp"

namespace rdlab {

enum class KernelRepresentation { GridSampled, AnalyticSymbol };

/// Value assigned to the origin cell when sampling grad W on the grid.
/// CellAverage is the analytic mean over the cell, which vanishes for odd
/// kernels; Zero forces 0. A singular kernel with the rule left Unset is a
/// configuration error.
enum class OriginCellRule { Unset, CellAverage, Zero };

struct KernelSpec {
    RadialPotential potential = RadialPotential::zero(1);
    KernelRepresentation representation = KernelRepresentation::GridSampled;
    OriginCellRule origin_cell_rule = OriginCellRule::Unset;

    void validate(const Grid& g) const;
};

/// Exact heat semigroup step for the generator (1/2) Laplacian: multiplies
/// mode k by exp(-s |k|^2 / 2). Mass (mode zero) is preserved exactly.
Field heat_step(const Field& rho, double s);

/// Gaussian smoothing with standard deviation sigma per axis (the s = sigma^2
/// heat step); used for kernel density estimates.
Field gaussian_blur(const Field& rho, double sigma);

/// Convolution/differentiation engine for a fixed grid and kernel. Prepares
/// the kernel's spectral data once; all apply methods are const and
/// thread-safe.
class InteractionOperator {
public:
    InteractionOperator(const Grid& g, const KernelSpec& spec);

    /// v = -(grad W) * rho. AnalyticSymbol multiplies rho-hat by the closed
    /// form -i k / |k|^2 (Newtonian; zero-mean gauge at k = 0). GridSampled
    /// convolves with grad W sampled at cell centres, origin cell per rule.
    VectorField velocity(const Field& rho) const;

    /// div((grad W) * g). For the Newtonian AnalyticSymbol the composite
    /// symbol is the constant -1 (the k = 0 singularity of 1/|k|^2 is
    /// removable in the product), so the result is exactly -g.
    Field div_grad_conv(const Field& g) const;

    const Grid& grid() const { return grid_; }
    const KernelSpec& spec() const { return spec_; }

private:
    Grid grid_;
    KernelSpec spec_;
    bool zero_kernel_ = false;
    bool analytic_ = false;
    std::vector<Spectrum> kernel_hat_; ///< sampled grad W components (GridSampled)
    std::vector<std::vector<double>> k_odd_;  ///< per-axis derivative wavenumbers
    std::vector<std::vector<double>> k_sq_;   ///< per-axis squared wavenumbers
};

/// One-shot wrappers around InteractionOperator.
VectorField interaction_velocity(const Field& rho, const KernelSpec& kernel);
Field divergence_of_grad_conv(const Field& g, const KernelSpec& kernel);

} // namespace rdlab
