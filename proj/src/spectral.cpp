#include "rdlab/spectral.hpp"

#include <cmath>

namespace rdlab {

void KernelSpec::validate(const Grid& g) const {
    if (potential.dimension() != g.dim)
        throw ConfigError("kernel potential dimension " +
                          std::to_string(potential.dimension()) +
                          " does not match grid dimension " + std::to_string(g.dim));
    if (representation == KernelRepresentation::AnalyticSymbol) {
        if (potential.kind() != PotentialKind::Newtonian &&
            potential.kind() != PotentialKind::Zero)
            throw ConfigError("analytic kernel symbol is only available for the Newtonian "
                              "potential (symbol 1/|k|^2)");
    } else if (potential.unbounded_gradient_at_origin() &&
               origin_cell_rule == OriginCellRule::Unset) {
        throw ConfigError("grid-sampled kernel is singular at the origin; set an origin cell "
                          "rule (cell_average or zero)");
    }
}

namespace {

// Multiplies modes by a per-mode factor produced from the axis wavenumber
// tables; walk keeps an index vector to avoid unflattening.
template <typename F>
void for_each_mode(const Grid& g, std::vector<std::complex<double>>& modes, F&& f) {
    std::array<int, 3> idx{0, 0, 0};
    const std::size_t total = modes.size();
    for (std::size_t m = 0; m < total; ++m) {
        f(idx, modes[m]);
        for (int a = g.dim - 1; a >= 0; --a) {
            if (++idx[a] < g.n)
                break;
            idx[a] = 0;
        }
    }
}

} // namespace

Field heat_step(const Field& rho, double s) {
    if (s < 0.0)
        throw std::invalid_argument("heat_step: duration must be non-negative");
    if (s == 0.0)
        return rho;
    const Grid& g = rho.grid;
    auto k = fft::wavenumbers(g, false);
    std::vector<double> k2(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        k2[i] = k[i] * k[i];
    Spectrum spec = fft::forward(rho);
    for_each_mode(g, spec.modes, [&](const std::array<int, 3>& idx, std::complex<double>& m) {
        double ksq = 0.0;
        for (int a = 0; a < g.dim; ++a)
            ksq += k2[static_cast<std::size_t>(idx[a])];
        m *= std::exp(-0.5 * s * ksq);
    });
    return fft::inverse(spec);
}

Field gaussian_blur(const Field& rho, double sigma) {
    return heat_step(rho, sigma * sigma);
}

InteractionOperator::InteractionOperator(const Grid& g, const KernelSpec& spec)
    : grid_(g), spec_(spec) {
    spec.validate(g);
    zero_kernel_ = spec.potential.kind() == PotentialKind::Zero;
    analytic_ = spec.representation == KernelRepresentation::AnalyticSymbol;
    k_odd_.assign(1, fft::wavenumbers(g, true));
    auto k = fft::wavenumbers(g, false);
    std::vector<double> k2(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        k2[i] = k[i] * k[i];
    k_sq_.assign(1, std::move(k2));
    if (zero_kernel_ || analytic_)
        return;

    // Sample each component of grad W at the periodic displacement grid. The
    // origin cell takes the analytic cell mean, which vanishes because the
    // components of grad W are odd; the Zero rule coincides for them.
    for (int a = 0; a < g.dim; ++a) {
        Field ka(g);
        for (std::size_t f = 0; f < ka.size(); ++f) {
            auto idx = g.unflat(f);
            double x[3] = {0, 0, 0};
            double r2 = 0.0;
            for (int b = 0; b < g.dim; ++b) {
                x[b] = g.displacement(idx[b]);
                r2 += x[b] * x[b];
            }
            double r = std::sqrt(r2);
            ka[f] = r == 0.0 ? 0.0 : spec.potential.radial_derivative(r) * x[a] / r;
        }
        kernel_hat_.push_back(fft::forward(ka));
    }
}

VectorField InteractionOperator::velocity(const Field& rho) const {
    if (rho.grid != grid_)
        throw ConfigError("interaction velocity: field grid does not match the operator");
    VectorField v(grid_);
    if (zero_kernel_)
        return v;
    Spectrum rho_hat = fft::forward(rho);
    const auto& kodd = k_odd_.front();
    const auto& ksq = k_sq_.front();

    if (analytic_) {
        // v-hat_a = -i k_a / |k|^2 rho-hat; mean mode stays zero (the only
        // gauge available on the torus).
        for (int a = 0; a < grid_.dim; ++a) {
            Spectrum comp = rho_hat;
            for_each_mode(grid_, comp.modes,
                          [&](const std::array<int, 3>& idx, std::complex<double>& m) {
                              double k2 = 0.0;
                              for (int b = 0; b < grid_.dim; ++b)
                                  k2 += ksq[static_cast<std::size_t>(idx[b])];
                              if (k2 == 0.0) {
                                  m = 0.0;
                                  return;
                              }
                              double ka = kodd[static_cast<std::size_t>(idx[a])];
                              m *= std::complex<double>(0.0, -ka / k2);
                          });
            v.comp[static_cast<std::size_t>(a)] = fft::inverse(comp);
        }
        return v;
    }

    const double hd = grid_.cell_volume();
    for (int a = 0; a < grid_.dim; ++a) {
        Spectrum comp = rho_hat;
        const auto& khat = kernel_hat_[static_cast<std::size_t>(a)].modes;
        for (std::size_t m = 0; m < comp.modes.size(); ++m)
            comp.modes[m] *= -hd * khat[m]; // v = -(grad W) * rho
        v.comp[static_cast<std::size_t>(a)] = fft::inverse(comp);
    }
    return v;
}

Field InteractionOperator::div_grad_conv(const Field& gfield) const {
    if (gfield.grid != grid_)
        throw ConfigError("div_grad_conv: field grid does not match the operator");
    if (zero_kernel_)
        return Field(grid_);

    if (analytic_) {
        // Composite symbol (i k) . (i k) / |k|^2 = -1 for every mode; the
        // k = 0 singularity of the kernel symbol is removable in the product,
        // and a constant multiplier commutes with the transform.
        Field out = gfield;
        out *= -1.0;
        return out;
    }

    const auto& kodd = k_odd_.front();
    const double hd = grid_.cell_volume();
    Spectrum g_hat = fft::forward(gfield);
    Spectrum div;
    div.grid = grid_;
    div.modes.assign(g_hat.modes.size(), {0.0, 0.0});
    for (int a = 0; a < grid_.dim; ++a) {
        const auto& khat = kernel_hat_[static_cast<std::size_t>(a)].modes;
        std::size_t m = 0;
        for_each_mode(grid_, div.modes,
                      [&](const std::array<int, 3>& idx, std::complex<double>& dm) {
                          double ka = kodd[static_cast<std::size_t>(idx[a])];
                          dm += std::complex<double>(0.0, ka) * hd * khat[m] * g_hat.modes[m];
                          ++m;
                      });
    }
    return fft::inverse(div);
}

VectorField interaction_velocity(const Field& rho, const KernelSpec& kernel) {
    return InteractionOperator(rho.grid, kernel).velocity(rho);
}

Field divergence_of_grad_conv(const Field& g, const KernelSpec& kernel) {
    return InteractionOperator(g.grid, kernel).div_grad_conv(g);
}

} // namespace rdlab
