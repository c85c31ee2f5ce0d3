#pragma once

#include <string>
#include <vector>

#include "rdlab/solver.hpp"

namespace rdlab {

enum class EnvelopeBranch { Coth, Tanh, Constant };

/// Explicit upper bound on the sup norm solving G' = f_sup - c_w G^2,
/// G(0) = rho0_sup, with equilibrium level M = sqrt(f_sup / c_w):
///   coth branch above M, tanh branch below, constant at M.
/// f_sup = 0 degenerates the coth branch to 1/(c_w (t + t0)).
struct Envelope {
    double M = 0.0;
    EnvelopeBranch branch = EnvelopeBranch::Constant;
    double t0 = 0.0;
    double c_w = 0.0;
    double f_sup = 0.0;
    double rho0_sup = 0.0;

    double operator()(double t) const;
};

/// Requires c_w > 0 (no envelope exists otherwise). t0 is solved so that the
/// envelope equals rho0_sup at t = 0.
Envelope make_envelope(double c_w, double f_sup, double rho0_sup);

struct EnvelopeReport {
    bool pass = false;
    double max_ratio = 0.0;     ///< max over records of sup(t) / envelope(t)
    std::size_t worst_record = 0;
    double slack = 0.0;
};

/// Checks sup(t) <= envelope(t) * (1 + slack) at every record and fills the
/// diagnostics' envelope column.
EnvelopeReport verify_envelope(Diagnostics& diag, const Envelope& env, double slack = 0.05);

struct MaxPrincipleVerdict {
    bool ok = false;
    double max_sup = 0.0;
    double initial_sup = 0.0;
    std::size_t argmax_record = 0;
    double tolerance = 0.0;
};

/// Verdict true iff the running max of the sup norm never exceeds its initial
/// value (within multiplicative tolerance). Caller guarantees sup(0) >= M.
MaxPrincipleVerdict maximum_principle_check(const Diagnostics& diag, double M,
                                            double tolerance = 0.02);

struct DiffInequalityReport {
    bool pass = false;
    double worst_excess = 0.0; ///< max of measured forward difference minus bound
    std::size_t worst_record = 0;
    double slack = 0.0;
};

/// Discrete sampling of the sup-norm differential inequality: forward
/// differences of the recorded sup norm against f_sup - c_w sup^2 plus
/// slack * f_sup.
DiffInequalityReport differential_inequality_check(const Diagnostics& diag, double c_w,
                                                   double f_sup, double slack = 0.05);

enum class GrowthVerdict { Unbounded, Converges, Inconclusive };

struct GrowthReport {
    int dimension = 1;
    std::vector<double> times;
    std::vector<double> values;
    double growth_exponent = 0.0;  ///< power-law fit over the last octaves
    double log_fit_residual = 0.0; ///< residual of the a + b log t fit
    double log_fit_slope = 0.0;
    double increment_ratio = 0.0;  ///< successive octave-increment ratio
    GrowthVerdict verdict = GrowthVerdict::Inconclusive;
    double fitted_limit = 0.0;     ///< geometric tail extrapolation, when converging
};

/// Growth of rho_t(0) = int_0^t (G_s * f)(0) ds on a doubling time ladder for
/// the immigration-only dynamics. Expected behaviour: ~sqrt(t) in d = 1,
/// ~log t in d = 2, convergence to (G * f)(0) in d >= 3 with the Green
/// function of (1/2) Laplacian, G(x) = |x|^{2-d}/(2 pi) in d = 3.
GrowthReport dichotomy_experiment(const Field& f, const std::vector<double>& t_ladder);

/// Direct Green-function quadrature (G * f)(0) for d = 3; the independent
/// route the dichotomy limit is compared against.
double green_potential_at_origin(const Field& f);

/// Expected mass within unit distance of a diffusing immigration source:
/// E(t) = gamma int_0^t int_{B(0,1)} G_{2(t-s)}(x) dx ds, using the closed
/// form of the inner ball mass and adaptive quadrature in time. Same
/// {sqrt(t), log t, bounded} trichotomy as the dichotomy experiment.
GrowthReport clumping_exponent(int dimension, double gamma, const std::vector<double>& t_ladder);

/// Gaussian mass of the unit ball: P(|Z| <= 1) for Z ~ N(0, s I_d).
double unit_ball_heat_mass(int dimension, double s);

std::vector<double> doubling_ladder(double t0, int octaves);

struct SharpnessResult {
    Field rho0;
    double epsilon = 0.0;
    double div_at_center = 0.0; ///< measured div((grad W) * rho0) at x0
    double margin = 0.0;        ///< div + c * rho0(x0), positive on success
    std::vector<std::pair<double, double>> attempts; ///< (epsilon, margin)
};

/// Builds the counterexample density for the sharpness of the sup-norm
/// inequality at a rate c > c_W: mass placed where Lap W > 0 (a mollified
/// shell indicator, shrunk by epsilon and capped at radius 1/epsilon) plus a
/// flat-topped bump of the requested height at x0. Epsilon is halved along
/// {1/2, 1/4, ..., 2^-8} * box width until the discretely evaluated
/// div((grad W) * rho0)(x0) exceeds -c rho0(x0); exhausting the ladder raises
/// ConstructionError carrying the best margin.
SharpnessResult sharpness_counterexample(const Grid& g, const KernelSpec& kernel, double c,
                                         std::array<double, 3> x0, double height,
                                         const PotentialIndices& indices);

struct ForwardDiffCheck {
    double measured = 0.0; ///< (sup(dt) - sup(0)) / dt from one solver step
    double bound = 0.0;    ///< f_sup - c * sup(0)^2
    double margin = 0.0;   ///< measured - bound
    bool exceeds = false;
};

/// One-step forward difference of the sup norm from rho0 against the rate-c
/// bound; the dynamic half of the sharpness check.
ForwardDiffCheck sharpness_forward_difference(const Field& rho0, const SimConfig& cfg, double c,
                                              double dt);

} // namespace rdlab
