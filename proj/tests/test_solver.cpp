#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rdlab/fft.hpp"
#include "rdlab/shapes.hpp"
#include "rdlab/solver.hpp"

using namespace rdlab;

namespace {

KernelSpec newtonian_analytic(int dim) {
    return {RadialPotential::newtonian(dim), KernelRepresentation::AnalyticSymbol,
            OriginCellRule::Unset};
}

KernelSpec zero_kernel(int dim) {
    return {RadialPotential::zero(dim), KernelRepresentation::GridSampled,
            OriginCellRule::CellAverage};
}

// exact heat + constant-source solution, rho_t = G_t * rho0 + int_0^t G_s * f ds
Field heat_source_solution(const Field& rho0, const Field& f, double t) {
    const Grid& g = rho0.grid;
    Spectrum r = fft::forward(rho0);
    Spectrum fh = fft::forward(f);
    auto k = fft::wavenumbers(g, false);
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t m = 0; m < r.modes.size(); ++m) {
        double ksq = 0.0;
        for (int a = 0; a < g.dim; ++a)
            ksq += k[static_cast<std::size_t>(idx[a])] * k[static_cast<std::size_t>(idx[a])];
        double decay = std::exp(-0.5 * t * ksq);
        double psi = ksq == 0.0 ? t : (1.0 - decay) / (0.5 * ksq);
        r.modes[m] = decay * r.modes[m] + psi * fh.modes[m];
        for (int a = g.dim - 1; a >= 0; --a) {
            if (++idx[a] < g.n)
                break;
            idx[a] = 0;
        }
    }
    return fft::inverse(r);
}

} // namespace

TEST_CASE("splitting reduces to the exact heat flow without interaction or source") {
    Grid g(1, 256, 10.0);
    SimConfig cfg;
    cfg.kernel = zero_kernel(1);
    cfg.rho0 = make_gaussian(g, 1.0, 0.5);
    cfg.immigration = Immigration::none(g);
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    Diagnostics diag = run(cfg);
    REQUIRE(!diag.halted);
    Field want = make_gaussian(g, 1.0, std::sqrt(0.25 + 1.0));
    CHECK(sup_distance(diag.final_state, want) <= 1e-10);
}

TEST_CASE("splitting matches the Duhamel solution for pure immigration") {
    Grid g(1, 256, 10.0);
    SimConfig cfg;
    cfg.kernel = zero_kernel(1);
    cfg.rho0 = Field(g);
    Field f = make_bump(g, 1.0, 1.0);
    cfg.immigration = Immigration::constant(f);
    cfg.dt = 0.005;
    cfg.t_end = 1.0;
    Diagnostics diag = run(cfg);
    REQUIRE(!diag.halted);
    Field want = heat_source_solution(cfg.rho0, f, 1.0);
    CHECK(sup_distance(diag.final_state, want) <= 1e-5);
}

TEST_CASE("zero data stays identically zero") {
    Grid g(1, 64, 5.0);
    SimConfig cfg;
    cfg.kernel = newtonian_analytic(1);
    cfg.rho0 = Field(g);
    cfg.immigration = Immigration::none(g);
    cfg.dt = 0.01;
    cfg.t_end = 0.2;
    Diagnostics diag = run(cfg);
    REQUIRE(!diag.halted);
    for (double s : diag.sup_norm)
        CHECK(s == 0.0);
    for (double m : diag.l1_mass)
        CHECK(m == 0.0);
}

TEST_CASE("mass follows the affine law and the density stays non-negative") {
    Grid g(1, 256, 10.0);
    SimConfig cfg;
    cfg.kernel = newtonian_analytic(1);
    cfg.rho0 = make_gaussian(g, 1.0, 1.0);
    Field f = make_bump(g, 0.5, 1.0);
    cfg.immigration = Immigration::constant(f);
    cfg.dt = 0.005;
    cfg.t_end = 2.0;
    Diagnostics diag = run(cfg);
    REQUIRE(!diag.halted);

    double rate = norms(f).l1;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        double expected = diag.initial_l1 + diag.times[i] * rate;
        CHECK(std::abs(diag.l1_mass[i] - expected) <= 1e-6 * expected + 1e-12);
    }
    CHECK(min_value(diag.final_state) >= -cfg.positivity_tolerance * norms(diag.final_state).sup);
}

TEST_CASE("time-dependent immigration keeps the discrete mass ledger exact") {
    Grid g(1, 128, 8.0);
    Field base = make_bump(g, 0.4, 1.0);
    SimConfig cfg;
    cfg.kernel = zero_kernel(1);
    cfg.rho0 = Field(g);
    cfg.immigration = Immigration::time_dependent(
        [base](double t) {
            Field f = base;
            f *= 1.0 + 0.5 * std::sin(t);
            return f;
        },
        g);
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    Diagnostics diag = run(cfg);
    REQUIRE(!diag.halted);
    CHECK(diag.max_mass_residual <= 1e-9 * diag.l1_mass.back());
}

TEST_CASE("self-convergence order sits between one and two") {
    Grid g(1, 256, 10.0);
    auto solve = [&](double dt) {
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(1);
        cfg.rho0 = make_bump(g, 1.0, 1.0);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        cfg.dt = dt;
        cfg.t_end = 0.48;
        Diagnostics diag = run(cfg);
        REQUIRE(!diag.halted);
        return diag.final_state;
    };
    Field a = solve(0.04);
    Field b = solve(0.02);
    Field c = solve(0.01);
    double e1 = sup_distance(a, b);
    double e2 = sup_distance(b, c);
    double order = std::log2(e1 / e2);
    CHECK(order >= 0.8);
    CHECK(order <= 2.6);
}

TEST_CASE("radially symmetric data stays radially symmetric") {
    SUBCASE("d=2") {
        Grid g(2, 64, 6.0);
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(2);
        cfg.rho0 = make_gaussian(g, 1.0, 0.8);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        cfg.dt = 0.01;
        cfg.t_end = 0.3;
        Diagnostics diag = run(cfg);
        REQUIRE(!diag.halted);
        CHECK(asymmetry(diag.final_state) <= 1e-10);
        // the max never leaves the centre cell
        for (const auto& am : diag.argmax) {
            CHECK(am[0] == g.n / 2);
            CHECK(am[1] == g.n / 2);
        }
    }
    SUBCASE("d=3 short run") {
        Grid g(3, 64, 5.0);
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(3);
        cfg.rho0 = make_gaussian(g, 1.0, 0.8);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.2));
        cfg.dt = 0.04;
        cfg.t_end = 0.2;
        Diagnostics diag = run(cfg);
        REQUIRE(!diag.halted);
        CHECK(asymmetry(diag.final_state) <= 1e-10);
    }
}

TEST_CASE("attraction-driven growth trips the blowup guard gracefully") {
    Grid g(1, 256, 10.0);
    SimConfig cfg;
    // attractive harmonic well: W = +|x|^2/2 is the negated repulsive power law
    cfg.kernel = {RadialPotential::mixture({{-5.0, RadialPotential::power_law(2.0, 1)}}),
                  KernelRepresentation::GridSampled, OriginCellRule::CellAverage};
    cfg.rho0 = make_gaussian(g, 2.0, 1.0);
    cfg.immigration = Immigration::none(g);
    cfg.dt = 0.002;
    cfg.t_end = 2.0;
    cfg.blowup_factor = 1.3;
    cfg.positivity_tolerance = 1e-6; // compression regime is deliberately under-resolved
    Diagnostics diag = run(cfg);
    CHECK(diag.blowup);
    CHECK(diag.halted);
    CHECK(diag.size() > 1); // partial diagnostics retained
    CHECK(diag.times.back() < 2.0);
}

TEST_CASE("stiff velocity trips the sub-step budget") {
    Grid g(1, 256, 10.0);
    SimConfig cfg;
    cfg.kernel = newtonian_analytic(1);
    cfg.rho0 = make_gaussian(g, 5.0, 0.5);
    cfg.immigration = Immigration::none(g);
    cfg.dt = 1.0;
    cfg.t_end = 1.0;
    cfg.max_substeps = 3;
    Diagnostics diag = run(cfg);
    CHECK(diag.halted);
    CHECK(diag.halt_reason.find("sub-steps") != std::string::npos);
}

TEST_CASE("picard fixed point") {
    Grid g(1, 256, 10.0);

    SUBCASE("without interaction the map lands on the Duhamel solution immediately") {
        SimConfig cfg;
        cfg.kernel = zero_kernel(1);
        cfg.rho0 = make_gaussian(g, 1.0, 0.8);
        Field f = make_bump(g, 0.5, 1.0);
        cfg.immigration = Immigration::constant(f);
        cfg.dt = 0.01;
        cfg.t_end = 0.5;
        PicardResult res = picard_solve(cfg, 0.5, 5, 32);
        REQUIRE(res.iterate_distances.size() >= 2);
        CHECK(res.iterate_distances[1] <= 1e-13 * (1.0 + res.iterate_distances[0]));
        Field want = heat_source_solution(cfg.rho0, f, 0.5);
        CHECK(sup_distance(res.field, want) <= 1e-10);
    }

    SUBCASE("iterate distances decay geometrically on a short horizon") {
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(1);
        cfg.rho0 = make_bump(g, 1.0, 1.0);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        cfg.dt = 0.01;
        cfg.t_end = 0.05;
        PicardResult res = picard_solve(cfg, 0.05, 12, 64);
        CHECK(res.converged);
        CHECK(res.contraction_ratio < 0.5);
        // strictly decreasing until the rounding floor
        for (std::size_t i = 1; i < res.iterate_distances.size(); ++i) {
            if (res.iterate_distances[i - 1] < 1e-13)
                break;
            CHECK(res.iterate_distances[i] < res.iterate_distances[i - 1]);
        }
    }

    SUBCASE("splitting and picard agree on the benchmark") {
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(1);
        cfg.rho0 = make_bump(g, 1.0, 1.0);
        cfg.immigration = Immigration::constant(make_bump(g, 0.5, 1.0));
        cfg.dt = 0.05 / 64;
        cfg.t_end = 0.05;
        Diagnostics diag = run(cfg);
        REQUIRE(!diag.halted);
        PicardResult res = picard_solve(cfg, 0.05, 12, 64);
        double dist = sup_distance(diag.final_state, res.field);
        CHECK(dist <= std::max(1e-3, 5.0 * res.aposteriori_error));
    }

    SUBCASE("a long horizon breaks the contraction and reports the ratio") {
        SimConfig cfg;
        cfg.kernel = newtonian_analytic(1);
        cfg.rho0 = make_gaussian(g, 6.0, 0.6);
        cfg.immigration = Immigration::none(g);
        cfg.dt = 0.1;
        cfg.t_end = 8.0;
        CHECK_THROWS_AS(picard_solve(cfg, 8.0, 20, 32), ContractionError);
    }
}

TEST_CASE("recorded sup norms respect the discrete differential inequality") {
    // forward differences of the sup norm against f_sup - c_W sup^2 with the
    // standard 5% slack; the box is large enough that the torus background
    // mass/(2L) stays inside it
    Grid g(1, 1024, 40.0);
    SimConfig cfg;
    cfg.kernel = newtonian_analytic(1);
    cfg.rho0 = Field(g);
    Field f = make_bump(g, 1.0, 0.6);
    cfg.immigration = Immigration::constant(f);
    cfg.dt = 0.01;
    cfg.t_end = 3.0;
    cfg.record_interval = 0.05;
    Diagnostics diag = run(cfg);
    REQUIRE(!diag.halted);
    double f_sup = norms(f).sup;
    double fd_worst = -1e30;
    for (std::size_t i = 0; i + 1 < diag.size(); ++i) {
        double dtr = diag.times[i + 1] - diag.times[i];
        double fd = (diag.sup_norm[i + 1] - diag.sup_norm[i]) / dtr;
        fd_worst = std::max(fd_worst, fd - (f_sup - 1.0 * diag.sup_norm[i] * diag.sup_norm[i]));
    }
    CHECK(fd_worst <= 0.05 * f_sup);
}

TEST_CASE("config validation") {
    Grid g(1, 64, 5.0);
    SimConfig cfg;
    cfg.kernel = zero_kernel(1);
    cfg.rho0 = Field(g);
    cfg.immigration = Immigration::none(g);
    cfg.dt = -0.1;
    cfg.t_end = 1.0;
    CHECK_THROWS_AS(run(cfg), ConfigError);
    cfg.dt = 0.01;
    Field neg(g);
    neg[0] = -1.0;
    cfg.rho0 = neg;
    CHECK_THROWS_AS(run(cfg), ConfigError);
    CHECK_THROWS_AS(Immigration::constant(neg), ConfigError);
}
