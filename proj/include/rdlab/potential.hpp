#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdlab/errors.hpp"
#include "rdlab/quadrature.hpp"

namespace rdlab {

/// Surface area of the unit ball in R^d (2, 2*pi, 4*pi for d = 1, 2, 3).
double surface_area_unit_ball(int dim);

enum class PotentialKind { Newtonian, PowerLaw, Morse, Mixture, Zero, Tabulated };

/// Closed-form index values, where the catalog provides them. Unset entries
/// have no usable closed form for the given parameters.
struct KnownIndices {
    std::optional<double> eta;
    std::optional<double> alpha; ///< may be +infinity
    std::optional<double> c_w;
    std::optional<double> lap_plus;
    std::optional<double> lap_minus;
};

/// Radial interaction potential W(|x|) on R^d \ {0}, immutable after
/// construction and safe to share across threads.
///
/// The catalog:
///   Newtonian   W = c_d^-1 * (|x|^{2-d}/(d-2))   (-log|x|/(2 pi) in d = 2)
///   PowerLaw(A) W = -|x|^A / A                   (-log|x| at A = 0)
///   Morse       W = -C_A e^{-|x|/l_A} + C_R e^{-|x|/l_R}
///   Mixture     sum of coefficient * component
///   Zero        W = 0
///   Tabulated   monotone cubic interpolation of (r, W) samples in log r
class RadialPotential {
public:
    static RadialPotential newtonian(int dim);
    /// Repulsive power law; exponent must satisfy A > 1 - d (well-posedness
    /// range). Index computation additionally expects A >= 2 - d.
    static RadialPotential power_law(double exponent, int dim);
    static RadialPotential morse(double attract_coeff, double attract_range,
                                 double repulse_coeff, double repulse_range, int dim);
    static RadialPotential mixture(std::vector<std::pair<double, RadialPotential>> terms);
    static RadialPotential zero(int dim);
    static RadialPotential tabulated(std::vector<double> radii, std::vector<double> values,
                                     int dim);

    double value(double r) const;                    ///< W(r)
    double radial_derivative(double r) const;        ///< W'(r)
    double second_radial_derivative(double r) const; ///< W''(r)
    /// Pointwise radial Laplacian W'' + (d-1) W'/r, in closed form per kind so
    /// that identically-zero cases (Newtonian) do not leave rounding residue.
    /// r = 0 is rejected: the origin is excluded from the classical Laplacian.
    double laplacian(double r) const;

    int dimension() const { return dim_; }
    PotentialKind kind() const { return kind_; }
    const std::vector<std::pair<double, RadialPotential>>& terms() const { return terms_; }

    /// True if |W'(r)| is unbounded as r -> 0 (kernel cannot be sampled at the
    /// origin cell without a rule).
    bool unbounded_gradient_at_origin() const;
    /// W'(0+), finite for bounded-gradient kinds.
    double gradient_origin_limit() const;

    /// Radius range on which the profile is trusted data rather than
    /// extrapolation: (0, inf) for closed forms, the sample range for
    /// Tabulated, the intersection for mixtures. Index ladders and quadrature
    /// windows are clamped to it.
    double min_trusted_radius() const;
    double max_trusted_radius() const;

    std::optional<KnownIndices> known_indices() const;

    /// Key-value text description (kind + parameters). parse accepts the same
    /// format; see README for the schema.
    std::string describe() const;
    static RadialPotential parse(std::istream& in, const std::string& source_name = "");
    static RadialPotential parse_string(const std::string& text);
    /// One-line inline form, e.g. "newtonian", "morse 0 1 1 1", "powerlaw 1".
    static RadialPotential parse_inline(const std::string& text, int dim);

    // parameter accessors (meaningful per kind)
    double exponent() const { return p1_; }
    double attract_coeff() const { return p1_; }
    double attract_range() const { return p2_; }
    double repulse_coeff() const { return p3_; }
    double repulse_range() const { return p4_; }

private:
    RadialPotential() = default;

    PotentialKind kind_ = PotentialKind::Zero;
    int dim_ = 1;
    double p1_ = 0.0, p2_ = 1.0, p3_ = 0.0, p4_ = 1.0;
    std::vector<std::pair<double, RadialPotential>> terms_;
    struct Table;
    std::shared_ptr<const Table> table_;
};

/// Average radial component of grad W over the sphere of radius R; for a
/// radial potential this is exactly W'(R). R <= 0 is rejected.
double radial_avg_grad(const RadialPotential& w, double R);

/// Computed indices with per-field absolute error bounds. alpha and lap_minus
/// may be +infinity (their error entries are then 0).
struct PotentialIndices {
    double eta = 0.0;
    double alpha = 0.0;
    double c_w = 0.0;
    double lap_plus = 0.0;
    double lap_minus = 0.0;
    struct Errors {
        double eta = 0.0, alpha = 0.0, c_w = 0.0, lap_plus = 0.0, lap_minus = 0.0;
    } error;

    bool alpha_finite() const;
    /// |(eta - lap_plus) - (alpha - lap_minus)|, the gap between the two
    /// algebraic routes to c_W; only meaningful when alpha is finite.
    double consistency_gap() const;
};

struct IndexConfig {
    double short_ladder_start = 0.5;  ///< r_0 of the decreasing ladder r_0 * 2^-k
    int short_ladder_rungs = 20;
    double long_ladder_start = 1.0;   ///< R_0 of the increasing ladder R_0 * 2^k
    int long_ladder_rungs = 26;
    double divergence_threshold = 1e6;
    double quad_rel_tol = 1e-9;
    double quad_abs_tol = 1e-12;
    double scan_points_per_octave = 16.0; ///< sign-change scan density in log r
    double log_r_min = -120.0;            ///< scan window in u = log r
    double log_r_max = 120.0;
};

/// Computes eta, alpha (with divergence detection), the signed integrals of
/// the Laplacian, and c_W = eta - int (Lap W)_+. The short- and long-range
/// ratios are evaluated on geometric ladders and extrapolated; the integrals
/// run in u = log r, split at sign changes of Lap W, with adaptive
/// Gauss-Kronrod refinement per signed piece.
PotentialIndices compute_indices(const RadialPotential& w, const IndexConfig& cfg = {});

struct LinearityReport {
    PotentialIndices first;
    PotentialIndices second;
    PotentialIndices scaled;    ///< indices of a * W1
    PotentialIndices sum;       ///< indices of W1 + W2
    double scale = 1.0;
    double scaling_gap = 0.0;   ///< |c_{aW1} - a c_{W1}|
    double superadditivity_margin = 0.0; ///< c_{W1+W2} - c_{W1} - c_{W2}
    double tolerance = 0.0;
    bool scaling_ok = false;
    bool superadditive_ok = false;
};

/// Checks c_{aW1} = a c_{W1} and c_{W1+W2} >= c_{W1} + c_{W2} within the
/// combined error estimates plus the given slack.
LinearityReport check_linearity(const RadialPotential& w1, const RadialPotential& w2,
                                double a, double tolerance = 1e-6,
                                const IndexConfig& cfg = {});

} // namespace rdlab
