// Acceptance suite: runs every quantitative target at desk scale and prints
// one pass/fail line per criterion. Exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "rdlab/analysis.hpp"
#include "rdlab/particles.hpp"
#include "rdlab/potential.hpp"
#include "rdlab/shapes.hpp"
#include "rdlab/solver.hpp"

using namespace rdlab;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double time_budget_s,
               const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome out{false, ""};
    try {
        out = body();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_budget = time_budget_s <= 0.0 || secs <= time_budget_s;
    bool pass = out.pass && in_budget;
    if (!pass)
        ++failures;
    std::printf("[%2d] %s  %s (%s; %.2f s%s)\n", id, pass ? "PASS" : "FAIL", name.c_str(),
                out.detail.c_str(), secs,
                time_budget_s > 0.0
                    ? (std::string(in_budget ? " < " : " EXCEEDS ") +
                       std::to_string(static_cast<int>(time_budget_s)) + " s budget")
                          .c_str()
                    : "");
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

KernelSpec newtonian_analytic(int dim) {
    return {RadialPotential::newtonian(dim), KernelRepresentation::AnalyticSymbol,
            OriginCellRule::Unset};
}

} // namespace

int main() {
    std::printf("acceptance suite\n");

    // 1. Newtonian indices in every dimension, each within 1e-3 of 1.
    criterion(1, "potential indices: Newtonian eta, alpha, c_W = 1 in d = 1, 2, 3", 1.0, [] {
        double worst = 0.0;
        for (int d = 1; d <= 3; ++d) {
            auto idx = compute_indices(RadialPotential::newtonian(d));
            worst = std::max({worst, std::abs(idx.eta - 1.0), std::abs(idx.alpha - 1.0),
                              std::abs(idx.c_w - 1.0)});
        }
        return Outcome{worst <= 1e-3, "worst deviation " + fmt(worst) + " <= 1e-3"};
    });

    // 2. Index consistency for Newtonian+Morse mixtures plus exact scaling.
    criterion(2, "index consistency: cWsym gap and c_{aW} = a c_W on mixtures", 0.0, [] {
        auto newton = RadialPotential::newtonian(2);
        auto morse = RadialPotential::morse(0.0, 1.0, 1.0, 1.0, 2);
        double worst_gap = 0.0;
        for (double eps : {0.25, 1.0}) {
            auto mix = RadialPotential::mixture({{1.0, newton}, {eps, morse}});
            auto idx = compute_indices(mix);
            if (!idx.alpha_finite())
                return Outcome{false, "alpha unexpectedly infinite"};
            worst_gap = std::max(worst_gap, idx.consistency_gap());
        }
        auto mix = RadialPotential::mixture({{1.0, newton}, {1.0, morse}});
        auto base = compute_indices(mix);
        double worst_scale = 0.0;
        for (double a : {0.5, 2.0, 10.0}) {
            auto scaled = compute_indices(RadialPotential::mixture({{a, mix}}));
            worst_scale = std::max(worst_scale, std::abs(scaled.c_w - a * base.c_w));
        }
        bool ok = worst_gap <= 1e-3 && worst_scale <= 1e-3;
        return Outcome{ok, "max gap " + fmt(worst_gap) + ", max scaling error " +
                               fmt(worst_scale) + " <= 1e-3"};
    });

    // 3. Affine mass law along a full splitting run.
    criterion(3, "mass law: |l1(t) - l1(0) - t ||f||_1| <= 1e-6 final mass", 10.0, [] {
        Grid g(1, 256, 10.0);
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(1);
        cfg.rho0 = make_gaussian(g, 1.0, 1.0);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        cfg.dt = 0.005;
        cfg.t_end = 5.0;
        cfg.record_interval = 0.01;
        Diagnostics diag = run(cfg);
        if (diag.halted)
            return Outcome{false, "run halted: " + diag.halt_reason};
        double rate = diag.immigration_l1;
        double worst = 0.0;
        for (std::size_t i = 0; i < diag.size(); ++i)
            worst = std::max(worst, std::abs(diag.l1_mass[i] -
                                             (diag.initial_l1 + diag.times[i] * rate)));
        double bound = 1e-6 * diag.l1_mass.back();
        return Outcome{worst <= bound,
                       "worst residual " + fmt(worst) + " <= " + fmt(bound)};
    });

    // 4. The Newtonian divergence identity at spectral accuracy.
    criterion(4, "Newtonian identity: div(grad W_N * g) = -g, sup error <= 1e-6", 0.0, [] {
        Grid g(1, 256, 10.0);
        Field bump = make_bump(g, 1.0, 1.5);
        Field div = divergence_of_grad_conv(bump, newtonian_analytic(1));
        Field want = bump;
        want *= -1.0;
        double err = sup_distance(div, want);
        return Outcome{err <= 1e-6, "sup error " + fmt(err) + " <= 1e-6"};
    });

    // 5. Envelope dominance, maximum principle and global boundedness.
    criterion(5, "envelope: rho0 in {0, M, 2M} under the coth/tanh bound to t = 5", 0.0, [] {
        Grid g(1, 2048, 60.0);
        Field f = make_bump(g, 1.0, 0.6);
        auto idx = compute_indices(RadialPotential::newtonian(1));
        double f_sup = norms(f).sup;
        double M = std::sqrt(f_sup / idx.c_w);

        auto simulate = [&](const Field& rho0) {
            SimConfig cfg;
            cfg.kernel = newtonian_analytic(1);
            cfg.rho0 = rho0;
            cfg.immigration = Immigration::constant(f);
            cfg.dt = 0.01;
            cfg.t_end = 5.0;
            cfg.record_interval = 0.05;
            return run(cfg);
        };

        // rho0 = 0: tanh envelope holds with 5% slack
        Diagnostics d0 = simulate(Field(g));
        if (d0.halted)
            return Outcome{false, "rho0 = 0 run halted: " + d0.halt_reason};
        Envelope env0 = make_envelope(idx.c_w, f_sup, norms(Field(g)).sup);
        auto rep0 = verify_envelope(d0, env0, 0.05);

        // rho0 with sup M: global boundedness at 1.02 M
        Field at_m = make_bump(g, M, 1.0);
        double m_sup = norms(at_m).sup; // a touch below M after band-limiting
        Diagnostics d1 = simulate(at_m);
        if (d1.halted)
            return Outcome{false, "rho0 = M run halted: " + d1.halt_reason};
        double worst1 = 0.0;
        for (double s : d1.sup_norm)
            worst1 = std::max(worst1, s);
        bool bounded_ok = worst1 <= 1.02 * M;
        Envelope env1 = make_envelope(idx.c_w, f_sup, m_sup);
        auto rep1 = verify_envelope(d1, env1, 0.05);

        // rho0 with sup 2M: envelope plus the maximum principle at t = 0
        Field at_2m = make_bump(g, 2.0 * M, 1.0);
        Diagnostics d2 = simulate(at_2m);
        if (d2.halted)
            return Outcome{false, "rho0 = 2M run halted: " + d2.halt_reason};
        Envelope env2 = make_envelope(idx.c_w, f_sup, norms(at_2m).sup);
        auto rep2 = verify_envelope(d2, env2, 0.05);
        auto mp = maximum_principle_check(d2, M, 0.02);
        bool mp_ok = mp.ok && mp.argmax_record == 0;

        bool ok = rep0.pass && rep1.pass && rep2.pass && bounded_ok && mp_ok;
        return Outcome{ok, "envelope ratios " + fmt(rep0.max_ratio) + "/" +
                               fmt(rep1.max_ratio) + "/" + fmt(rep2.max_ratio) +
                               " <= 1.05; M-run max " + fmt(worst1) + " <= " +
                               fmt(1.02 * M) + "; 2M-run max at record 0: " +
                               (mp_ok ? "yes" : "no")};
    });

    // 6. Dichotomy of the immigration-only growth across dimensions.
    criterion(6, "dichotomy: sqrt(t) in d=1, log t in d=2, Green limit in d=3", 30.0, [] {
        Grid g1(1, 256, 10.0);
        auto r1 = dichotomy_experiment(make_bump(g1, 1.0, 1.0), doubling_ladder(0.5, 13));
        bool ok1 = std::abs(r1.growth_exponent - 0.5) <= 0.05 &&
                   r1.verdict == GrowthVerdict::Unbounded;

        Grid g2(2, 128, 8.0);
        auto r2 = dichotomy_experiment(make_bump(g2, 1.0, 1.0), doubling_ladder(0.5, 13));
        bool ok2 = r2.log_fit_residual <= 0.05 && r2.log_fit_slope > 0.0 &&
                   r2.verdict == GrowthVerdict::Unbounded;

        Grid g3(3, 64, 6.0);
        Field f3 = make_bump(g3, 1.0, 1.0);
        auto r3 = dichotomy_experiment(f3, doubling_ladder(0.5, 12));
        double green = green_potential_at_origin(f3);
        bool ok3 = r3.verdict == GrowthVerdict::Converges &&
                   std::abs(r3.fitted_limit - green) <= 0.02 * green;

        return Outcome{ok1 && ok2 && ok3,
                       "d=1 exponent " + fmt(r1.growth_exponent) + " (0.5 +- 0.05); d=2 log "
                       "residual " + fmt(r2.log_fit_residual) + " < 0.05; d=3 limit " +
                           fmt(r3.fitted_limit) + " vs Green " + fmt(green) + " within 2%"};
    });

    // 7. Clumping exponents of the expected near-source mass.
    criterion(7, "clumping exponents: {sqrt(t), log t, bounded} for d = 1, 2, 3", 0.0, [] {
        auto r1 = clumping_exponent(1, 1.0, doubling_ladder(0.5, 13));
        bool ok1 = std::abs(r1.growth_exponent - 0.5) <= 0.05;
        auto r2 = clumping_exponent(2, 1.0, doubling_ladder(0.5, 13));
        bool ok2 = r2.log_fit_residual <= 0.05 && r2.log_fit_slope > 0.0;
        auto r3 = clumping_exponent(3, 1.0, doubling_ladder(0.5, 13));
        std::size_t n = r3.values.size();
        double inc_last = r3.values[n - 1] - r3.values[n - 2];
        double inc_prev = r3.values[n - 2] - r3.values[n - 3];
        bool ok3 = r3.verdict == GrowthVerdict::Converges && inc_last < inc_prev;
        return Outcome{ok1 && ok2 && ok3,
                       "d=1 exponent " + fmt(r1.growth_exponent) + "; d=2 log residual " +
                           fmt(r2.log_fit_residual) + "; d=3 tail increments " +
                           fmt(inc_prev) + " -> " + fmt(inc_last) + " (vanishing)"};
    });

    // 8. Sharpness of the differential inequality at rate c = c_W + 1 = 2.
    criterion(8, "sharpness: forward difference beats ||f||_inf - 2 sup^2 at 3 resolutions",
              0.0, [] {
        auto idx = compute_indices(RadialPotential::newtonian(1));
        double c = idx.c_w + 1.0;
        std::string margins;
        bool ok = true;
        for (int n : {128, 256, 512}) {
            Grid g(1, n, 10.0);
            KernelSpec spec = newtonian_analytic(1);
            auto res = sharpness_counterexample(g, spec, c, {0, 0, 0}, 1.0, idx);
            SimConfig sim;
            sim.kernel = spec;
            sim.rho0 = res.rho0;
            sim.immigration = Immigration::constant(make_bump(g, 1.0, 1.0));
            sim.dt = 1e-3;
            sim.t_end = 1e-3;
            auto fd = sharpness_forward_difference(res.rho0, sim, c, 1e-3);
            ok = ok && res.margin > 0.0 && fd.exceeds;
            margins += fmt(fd.margin) + " ";
        }
        return Outcome{ok, "forward-difference margins " + margins + "all > 0"};
    });

    // 9. The splitting scheme against the fixed-point oracle.
    criterion(9, "oracle equivalence: splitting vs Picard at T = 0.05", 0.0, [] {
        Grid g(1, 256, 10.0);
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(1);
        cfg.rho0 = make_bump(g, 1.0, 1.0);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        cfg.dt = 0.05 / 64;
        cfg.t_end = 0.05;
        Diagnostics diag = run(cfg);
        if (diag.halted)
            return Outcome{false, "splitting run halted: " + diag.halt_reason};
        PicardResult res = picard_solve(cfg, 0.05, 12, 64);
        double dist = sup_distance(diag.final_state, res.field);
        double bound = std::max(1e-3, 5.0 * res.aposteriori_error);
        bool geometric = res.contraction_ratio < 1.0;
        for (std::size_t i = 1; i < res.iterate_distances.size(); ++i) {
            if (res.iterate_distances[i - 1] < 1e-13)
                break;
            geometric = geometric && res.iterate_distances[i] < res.iterate_distances[i - 1];
        }
        return Outcome{dist <= bound && geometric,
                       "sup distance " + fmt(dist) + " <= " + fmt(bound) +
                           ", contraction ratio " + fmt(res.contraction_ratio) + " < 1"};
    });

    // 10. Radial symmetry is preserved at every step.
    criterion(10, "radial symmetry: asymmetry <= 1e-8 throughout", 0.0, [] {
        double worst = 0.0;
        // d = 1
        {
            Grid g(1, 256, 10.0);
            SimConfig cfg;
            cfg.kernel = newtonian_analytic(1);
            cfg.rho0 = make_gaussian(g, 1.0, 1.0);
            cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
            cfg.dt = 0.01;
            cfg.t_end = 2.0;
            InteractionOperator op(g, cfg.kernel);
            Field rho = cfg.rho0;
            for (int k = 0; k < 200; ++k) {
                rho = step_splitting(rho, cfg, op, k * cfg.dt);
                worst = std::max(worst, asymmetry(rho));
            }
        }
        // d = 2 (reflections plus the axis swap)
        {
            Grid g(2, 128, 10.0);
            SimConfig cfg;
            cfg.kernel = newtonian_analytic(2);
            cfg.rho0 = make_gaussian(g, 1.0, 1.0);
            cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
            cfg.dt = 0.01;
            cfg.t_end = 1.0;
            InteractionOperator op(g, cfg.kernel);
            Field rho = cfg.rho0;
            for (int k = 0; k < 100; ++k) {
                rho = step_splitting(rho, cfg, op, k * cfg.dt);
                worst = std::max(worst, asymmetry(rho));
            }
        }
        return Outcome{worst <= 1e-8, "worst asymmetry " + fmt(worst) + " <= 1e-8"};
    });

    // 11. The particle system against its mean-field limit.
    criterion(11, "mean-field: monotone N0 ladder (W=0) and bounded density (Newtonian)",
              300.0, [] {
        // part A: free case, distance decreasing across the N0 ladder
        Grid g(1, 256, 10.0);
        SimConfig sim;
        sim.kernel = {RadialPotential::zero(1), KernelRepresentation::GridSampled,
                      OriginCellRule::CellAverage};
        sim.rho0 = make_gaussian(g, 1.0, 1.0);
        sim.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        sim.dt = 0.01;
        sim.t_end = 1.0;
        BpsConfig bps;
        bps.branch_rate = 0.5;
        bps.immigration = sim.immigration.base();
        bps.dt = 0.01;
        bps.seed = 12345;
        bps.particle_cap = 100000;
        bps.mollify_radius = g.spacing();
        auto rep = meanfield_compare(bps, sim, 1.0, 16, {100.0, 1000.0, 10000.0}, 0.35, 1);
        bool ok_a = rep.monotone;

        // part B: Newtonian repulsion keeps the particle density under 1.2 M
        auto idx = compute_indices(RadialPotential::newtonian(1));
        Field f = make_bump(g, 1.0, 1.0);
        double M = std::sqrt(norms(f).sup / idx.c_w);
        BpsConfig rep_bps;
        rep_bps.branch_rate = 0.5;
        rep_bps.immigration = f;
        rep_bps.dt = 0.005;
        rep_bps.seed = 777;
        rep_bps.particle_cap = 20000;
        rep_bps.interaction = RadialPotential::newtonian(1);
        rep_bps.mollify_radius = g.spacing();
        rep_bps.n0_scale = 2500.0;
        ParticleEnsemble ens = make_ensemble(Field(g), rep_bps);
        double worst_cell = 0.0;
        // run to t = 3: without repulsion the free growth ~ ||f||_1 sqrt(2t/pi)
        // would already exceed 1.2 M there, so the bound is discriminating
        const long long steps = 600;
        for (long long k = 1; k <= steps; ++k) {
            ens = bps_step(std::move(ens), rep_bps);
            if (k % 50 == 0)
                worst_cell =
                    std::max(worst_cell, norms(empirical_density(ens, g, 0.3)).sup);
        }
        bool ok_b = worst_cell <= 1.2 * M;
        std::string dists;
        for (double d : rep.distances)
            dists += fmt(d) + " ";
        return Outcome{ok_a && ok_b, "distances " + dists + "monotone: " +
                                         (ok_a ? "yes" : "no") + "; max cell density " +
                                         fmt(worst_cell) + " <= " + fmt(1.2 * M)};
    });

    std::printf("acceptance: %d/11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
