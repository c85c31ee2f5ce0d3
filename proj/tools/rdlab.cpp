// Experiment harness: parses a flat key-value config, dispatches the named
// experiment, writes CSV artifacts plus a summary with every tolerance used,
// and the fully resolved configuration for reproducibility.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
// 3 numerical halt (blowup / stiffness / contraction failure).

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rdlab/analysis.hpp"
#include "rdlab/config.hpp"
#include "rdlab/particles.hpp"
#include "rdlab/potential.hpp"
#include "rdlab/shapes.hpp"
#include "rdlab/solver.hpp"

namespace fs = std::filesystem;
using namespace rdlab;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int threads = 1;
    bool strict = false;
    bool verbose = false;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Collects resolved settings and check verdicts, then writes summary.txt and
/// resolved_config.txt. Checks carry their tolerances explicitly.
class Summary {
public:
    Summary(std::string experiment, const Options& opt)
        : experiment_(std::move(experiment)), opt_(opt) {}

    void setting(const std::string& key, const std::string& value) {
        settings_.emplace_back(key, value);
    }
    void setting(const std::string& key, double value) { setting(key, fmt(value)); }

    void check(const std::string& name, bool pass, const std::string& detail) {
        checks_.emplace_back(name, pass, detail);
        all_pass_ = all_pass_ && pass;
    }
    void info(const std::string& name, const std::string& detail) {
        infos_.emplace_back(name, detail);
    }

    bool all_pass() const { return all_pass_; }

    void write(const KeyValueConfig& cfg) const {
        fs::create_directories(opt_.out_dir);
        for (const auto& key : cfg.unused_keys())
            std::cerr << "warning: config key '" << key << "' was not used by " << experiment_
                      << "\n";
        {
            std::ofstream out(fs::path(opt_.out_dir) / "summary.txt");
            out << "experiment = " << experiment_ << "\n";
            out << "config = " << cfg.name() << "\n";
            out << "seed = " << opt_.seed << "\n";
            out << "strict = " << (opt_.strict ? "true" : "false") << "\n";
            for (const auto& [k, v] : settings_)
                out << k << " = " << v << "\n";
            for (const auto& [k, v] : infos_)
                out << "info " << k << ": " << v << "\n";
            for (const auto& [name, pass, detail] : checks_)
                out << "check " << name << " = " << (pass ? "PASS" : "FAIL") << " (" << detail
                    << ")\n";
            out << "result = " << (all_pass_ ? "PASS" : "FAIL") << "\n";
        }
        {
            std::ofstream out(fs::path(opt_.out_dir) / "resolved_config.txt");
            out << "# resolved configuration (" << experiment_ << ")\n";
            for (const auto& [k, v] : cfg.entries())
                out << k << " = " << v << "\n";
            out << "# effective settings\n";
            for (const auto& [k, v] : settings_)
                out << k << " = " << v << "\n";
        }
        for (const auto& [name, pass, detail] : checks_)
            std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << detail << ")\n";
        std::cout << "result: " << (all_pass_ ? "PASS" : "FAIL") << "\n";
    }

private:
    std::string experiment_;
    Options opt_;
    std::vector<std::pair<std::string, std::string>> settings_;
    std::vector<std::pair<std::string, std::string>> infos_;
    std::vector<std::tuple<std::string, bool, std::string>> checks_;
    bool all_pass_ = true;
};

int default_grid_n(int dim) { return dim == 1 ? 256 : dim == 2 ? 128 : 64; }

Grid load_grid(const KeyValueConfig& cfg, Summary& sum) {
    int dim = cfg.get_int("dimension", 1);
    Grid g(dim, cfg.get_int("grid_n", default_grid_n(dim)),
           cfg.get_double("box_half_width", 10.0));
    sum.setting("dimension", static_cast<double>(g.dim));
    sum.setting("grid_n", static_cast<double>(g.n));
    sum.setting("box_half_width", g.half_width);
    return g;
}

RadialPotential load_potential(const KeyValueConfig& cfg, int dim, Summary& sum) {
    RadialPotential pot = RadialPotential::zero(dim);
    if (cfg.has("potential_file")) {
        std::ifstream in(cfg.get_string("potential_file"));
        if (!in)
            throw ConfigError("cannot open potential file '" + cfg.get_string("potential_file") +
                              "'");
        pot = RadialPotential::parse(in, cfg.get_string("potential_file"));
        if (pot.dimension() != dim)
            throw ConfigError("potential file dimension does not match the configured dimension");
        sum.setting("potential", "file " + cfg.get_string("potential_file"));
    } else if (cfg.has("potential_term")) {
        std::vector<std::pair<double, RadialPotential>> terms;
        for (const auto& line : cfg.get_all("potential_term")) {
            std::istringstream ls(line);
            double coeff;
            if (!(ls >> coeff))
                throw ConfigError("potential_term needs a leading coefficient: '" + line + "'");
            std::string rest;
            std::getline(ls, rest);
            terms.emplace_back(coeff, RadialPotential::parse_inline(rest, dim));
        }
        pot = RadialPotential::mixture(std::move(terms));
        sum.setting("potential", "mixture of " + std::to_string(pot.terms().size()) + " terms");
    } else {
        std::string inline_form = cfg.get_string("potential", "zero");
        pot = RadialPotential::parse_inline(inline_form, dim);
        sum.setting("potential", inline_form);
    }
    return pot;
}

KernelSpec load_kernel(const KeyValueConfig& cfg, const RadialPotential& pot, Summary& sum) {
    KernelSpec spec;
    spec.potential = pot;
    bool analytic_ok =
        pot.kind() == PotentialKind::Newtonian || pot.kind() == PotentialKind::Zero;
    std::string rep =
        cfg.get_string("kernel_representation", analytic_ok ? "analytic" : "sampled");
    if (rep == "analytic")
        spec.representation = KernelRepresentation::AnalyticSymbol;
    else if (rep == "sampled")
        spec.representation = KernelRepresentation::GridSampled;
    else
        throw ConfigError("kernel_representation must be 'analytic' or 'sampled'");
    std::string rule = cfg.get_string("origin_cell_rule", "cell_average");
    if (rule == "cell_average")
        spec.origin_cell_rule = OriginCellRule::CellAverage;
    else if (rule == "zero")
        spec.origin_cell_rule = OriginCellRule::Zero;
    else if (rule == "unset")
        spec.origin_cell_rule = OriginCellRule::Unset;
    else
        throw ConfigError("origin_cell_rule must be 'cell_average', 'zero' or 'unset'");
    sum.setting("kernel_representation", rep);
    sum.setting("origin_cell_rule", rule);
    return spec;
}

SimConfig load_sim(const KeyValueConfig& cfg, const Grid& g, const KernelSpec& kernel,
                   Summary& sum) {
    SimConfig sim;
    sim.kernel = kernel;
    sim.rho0 = parse_shape(cfg.get_string("rho0", "zero"), g);
    sim.immigration =
        Immigration::constant(parse_shape(cfg.get_string("immigration", "zero"), g));
    sim.dt = cfg.get_double("dt", 0.01);
    sim.t_end = cfg.get_double("t_end", 1.0);
    sim.record_interval = cfg.get_double("record_interval", 0.0);
    sim.cfl = cfg.get_double("cfl", 0.9);
    sim.max_substeps = cfg.get_int("max_substeps", 10000);
    sim.blowup_factor = cfg.get_double("blowup_factor", 1e6);
    sim.positivity_tolerance = cfg.get_double("positivity_tolerance", 1e-8);
    sum.setting("rho0", cfg.get_string("rho0", "zero"));
    sum.setting("immigration", cfg.get_string("immigration", "zero"));
    sum.setting("dt", sim.dt);
    sum.setting("t_end", sim.t_end);
    sum.setting("cfl", sim.cfl);
    sum.setting("blowup_factor", sim.blowup_factor);
    sum.setting("positivity_tolerance", sim.positivity_tolerance);
    return sim;
}

void write_growth_csv(const GrowthReport& rep, const std::string& path) {
    std::ofstream out(path);
    out << "t,value\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        out << fmt(rep.times[i]) << "," << fmt(rep.values[i]) << "\n";
}

IndexConfig load_index_config(const KeyValueConfig& cfg) {
    IndexConfig ic;
    ic.short_ladder_start = cfg.get_double("short_ladder_start", ic.short_ladder_start);
    ic.long_ladder_start = cfg.get_double("long_ladder_start", ic.long_ladder_start);
    ic.short_ladder_rungs = cfg.get_int("short_ladder_rungs", ic.short_ladder_rungs);
    ic.long_ladder_rungs = cfg.get_int("long_ladder_rungs", ic.long_ladder_rungs);
    ic.divergence_threshold = cfg.get_double("divergence_threshold", ic.divergence_threshold);
    return ic;
}

// ---------------------------------------------------------------------------

int cmd_analyze_potential(const KeyValueConfig& cfg, const Options& opt) {
    Summary sum("analyze-potential", opt);
    int dim = cfg.get_int("dimension", 1);
    sum.setting("dimension", static_cast<double>(dim));
    RadialPotential pot = load_potential(cfg, dim, sum);
    IndexConfig ic = load_index_config(cfg);
    double tol = cfg.get_double("consistency_tolerance", 1e-3) * (opt.strict ? 0.5 : 1.0);
    sum.setting("consistency_tolerance", tol);

    PotentialIndices idx = compute_indices(pot, ic);
    {
        std::ofstream out(fs::path(opt.out_dir) / "report.csv");
        out << "quantity,value,abs_error\n";
        out << "eta," << fmt(idx.eta) << "," << fmt(idx.error.eta) << "\n";
        out << "alpha," << fmt(idx.alpha) << "," << fmt(idx.error.alpha) << "\n";
        out << "c_w," << fmt(idx.c_w) << "," << fmt(idx.error.c_w) << "\n";
        out << "lap_plus," << fmt(idx.lap_plus) << "," << fmt(idx.error.lap_plus) << "\n";
        out << "lap_minus," << fmt(idx.lap_minus) << "," << fmt(idx.error.lap_minus) << "\n";
    }
    sum.info("eta", fmt(idx.eta) + " +- " + fmt(idx.error.eta));
    sum.info("alpha", fmt(idx.alpha) + " +- " + fmt(idx.error.alpha));
    sum.info("c_w", fmt(idx.c_w) + " +- " + fmt(idx.error.c_w));
    sum.info("lap_plus", fmt(idx.lap_plus) + " +- " + fmt(idx.error.lap_plus));
    sum.info("lap_minus", fmt(idx.lap_minus) + " +- " + fmt(idx.error.lap_minus));

    if (idx.alpha_finite() && std::isfinite(idx.lap_minus)) {
        double gap = idx.consistency_gap();
        sum.check("index_consistency", gap <= tol,
                  "|(eta-lap+)-(alpha-lap-)| = " + fmt(gap) + ", tolerance " + fmt(tol));
    } else {
        sum.info("index_consistency", "skipped: alpha or lap_minus infinite");
    }
    if (auto known = pot.known_indices()) {
        auto match = [&](const char* name, std::optional<double> want, double got, double err) {
            if (!want)
                return;
            if (std::isinf(*want) || std::isinf(got)) {
                sum.check(std::string("closed_form_") + name,
                          std::isinf(got) == std::isinf(*want),
                          "closed form " + fmt(*want) + ", computed " + fmt(got));
                return;
            }
            double bound = std::max(tol, err);
            sum.check(std::string("closed_form_") + name, std::abs(got - *want) <= bound,
                      "closed form " + fmt(*want) + ", computed " + fmt(got) + ", tolerance " +
                          fmt(bound));
        };
        match("eta", known->eta, idx.eta, idx.error.eta);
        match("alpha", known->alpha, idx.alpha, idx.error.alpha);
        match("c_w", known->c_w, idx.c_w, idx.error.c_w);
    }
    if (cfg.has("linearity_with")) {
        RadialPotential other =
            RadialPotential::parse_inline(cfg.get_string("linearity_with"), dim);
        double a = cfg.get_double("linearity_scale", 2.0);
        auto rep = check_linearity(pot, other, a, tol, ic);
        sum.check("linearity_scaling", rep.scaling_ok,
                  "|c_aW - a c_W| = " + fmt(rep.scaling_gap) + ", tolerance " + fmt(tol));
        sum.check("superadditivity", rep.superadditive_ok,
                  "c_{W1+W2} - c_W1 - c_W2 = " + fmt(rep.superadditivity_margin) +
                      ", tolerance -" + fmt(tol));
    }
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

int run_simulation_command(const KeyValueConfig& cfg, const Options& opt,
                           const std::string& name) {
    Summary sum(name, opt);
    Grid g = load_grid(cfg, sum);
    RadialPotential pot = load_potential(cfg, g.dim, sum);
    KernelSpec kernel = load_kernel(cfg, pot, sum);
    SimConfig sim = load_sim(cfg, g, kernel, sum);

    Diagnostics diag = run(sim);

    double mass_tol = cfg.get_double("mass_tolerance", 1e-6) * (opt.strict ? 0.5 : 1.0);
    double boundary_tol = cfg.get_double("boundary_tolerance", 1e-6);
    double final_mass = diag.l1_mass.back();
    sum.setting("mass_tolerance_rel", mass_tol);
    sum.setting("boundary_tolerance", boundary_tol);
    sum.check("mass_law", diag.max_mass_residual <= mass_tol * std::max(final_mass, 1e-300),
              "max residual " + fmt(diag.max_mass_residual) + ", tolerance " +
                  fmt(mass_tol * std::max(final_mass, 1e-300)));
    if (cfg.get_bool("boundary_check", true))
        sum.check("boundary_density", diag.max_boundary_ratio <= boundary_tol,
                  "max boundary/sup " + fmt(diag.max_boundary_ratio) + ", tolerance " +
                      fmt(boundary_tol));
    if (cfg.get_bool("radial_check", false)) {
        double asym = asymmetry(diag.final_state);
        double asym_tol = cfg.get_double("asymmetry_tolerance", 1e-8);
        sum.check("radial_symmetry", asym <= asym_tol,
                  "final asymmetry " + fmt(asym) + ", tolerance " + fmt(asym_tol));
    }

    bool envelope_mode = name == "envelope-check";
    bool mp_mode = name == "maximum-principle";
    if (envelope_mode || mp_mode) {
        PotentialIndices idx = compute_indices(pot, load_index_config(cfg));
        double f_sup = sim.immigration.sup(0.0);
        double rho0_sup = norms(sim.rho0).sup;
        sum.info("c_w", fmt(idx.c_w) + " +- " + fmt(idx.error.c_w));
        if (envelope_mode) {
            double slack = cfg.get_double("envelope_slack", 0.05) * (opt.strict ? 0.5 : 1.0);
            Envelope env = make_envelope(idx.c_w, f_sup, rho0_sup);
            auto rep = verify_envelope(diag, env, slack);
            sum.setting("envelope_branch", env.branch == EnvelopeBranch::Coth    ? "coth"
                                           : env.branch == EnvelopeBranch::Tanh ? "tanh"
                                                                                : "constant");
            sum.setting("envelope_M", env.M);
            sum.setting("envelope_t0", env.t0);
            sum.check("envelope_dominance", rep.pass,
                      "max sup/envelope " + fmt(rep.max_ratio) + ", slack " + fmt(slack));
            double di_slack = cfg.get_double("diff_ineq_slack", 0.05) * (opt.strict ? 0.5 : 1.0);
            auto di = differential_inequality_check(diag, idx.c_w, f_sup, di_slack);
            sum.check("differential_inequality", di.pass,
                      "worst excess " + fmt(di.worst_excess) + ", slack " +
                          fmt(di_slack * f_sup));
        } else {
            double M = std::sqrt(f_sup / idx.c_w);
            sum.setting("M", M);
            std::string mode = cfg.get_string("mp_mode", "maximum");
            if (mode == "maximum") {
                double tol = cfg.get_double("mp_tolerance", 0.02) * (opt.strict ? 0.5 : 1.0);
                auto verdict = maximum_principle_check(diag, M, tol);
                sum.check("maximum_principle", verdict.ok && verdict.argmax_record == 0,
                          "max sup " + fmt(verdict.max_sup) + " at record " +
                              std::to_string(verdict.argmax_record) + ", initial " +
                              fmt(verdict.initial_sup) + ", tolerance " + fmt(tol));
            } else if (mode == "bounded") {
                double tol =
                    cfg.get_double("bounded_tolerance", 0.02) * (opt.strict ? 0.5 : 1.0);
                double worst = 0.0;
                for (double s : diag.sup_norm)
                    worst = std::max(worst, s);
                sum.check("global_boundedness", worst <= M * (1.0 + tol),
                          "max sup " + fmt(worst) + ", bound M(1+tol) = " +
                              fmt(M * (1.0 + tol)));
            } else {
                throw ConfigError("mp_mode must be 'maximum' or 'bounded'");
            }
        }
    }

    write_diagnostics_csv(diag, g, (fs::path(opt.out_dir) / "diagnostics.csv").string());
    if (cfg.get_bool("save_final_state", false))
        write_binary(diag.final_state, (fs::path(opt.out_dir) / "final_state.bin").string());
    if (diag.halted) {
        sum.info("halt", diag.halt_reason);
        sum.check("completed", false, diag.halt_reason);
        sum.write(cfg);
        return 3;
    }
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

int cmd_dichotomy(const KeyValueConfig& cfg, const Options& opt) {
    Summary sum("dichotomy", opt);
    Grid g = load_grid(cfg, sum);
    Field f = parse_shape(cfg.get_string("immigration", "bump 1 1"), g);
    auto ladder = doubling_ladder(cfg.get_double("ladder_start", 0.5),
                                  cfg.get_int("ladder_octaves", 13));
    GrowthReport rep = dichotomy_experiment(f, ladder);
    write_growth_csv(rep, (fs::path(opt.out_dir) / "series.csv").string());

    double exp_tol = cfg.get_double("exponent_tolerance", 0.05) * (opt.strict ? 0.5 : 1.0);
    double log_tol = cfg.get_double("log_residual_tolerance", 0.05) * (opt.strict ? 0.5 : 1.0);
    double limit_tol = cfg.get_double("limit_tolerance", 0.02) * (opt.strict ? 0.5 : 1.0);
    sum.setting("exponent_tolerance", exp_tol);
    sum.setting("log_residual_tolerance", log_tol);
    sum.setting("limit_tolerance", limit_tol);
    sum.info("growth_exponent", fmt(rep.growth_exponent));
    sum.info("log_fit_residual", fmt(rep.log_fit_residual));
    sum.info("increment_ratio", fmt(rep.increment_ratio));

    if (g.dim == 1) {
        sum.check("sqrt_growth",
                  std::abs(rep.growth_exponent - 0.5) <= exp_tol &&
                      rep.verdict == GrowthVerdict::Unbounded,
                  "exponent " + fmt(rep.growth_exponent) + ", expected 0.5 +- " + fmt(exp_tol));
    } else if (g.dim == 2) {
        sum.check("log_growth",
                  rep.log_fit_residual <= log_tol && rep.log_fit_slope > 0.0 &&
                      rep.verdict == GrowthVerdict::Unbounded,
                  "log-fit residual " + fmt(rep.log_fit_residual) + ", tolerance " +
                      fmt(log_tol));
    } else {
        double green = green_potential_at_origin(f);
        sum.info("green_value", fmt(green));
        bool ok = rep.verdict == GrowthVerdict::Converges &&
                  std::abs(rep.fitted_limit - green) <= limit_tol * std::abs(green);
        sum.check("green_limit", ok,
                  "fitted limit " + fmt(rep.fitted_limit) + ", quadrature " + fmt(green) +
                      ", tolerance " + fmt(limit_tol) + " relative");
    }
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

int cmd_clumping(const KeyValueConfig& cfg, const Options& opt) {
    Summary sum("clumping", opt);
    int dim = cfg.get_int("dimension", 1);
    double gamma = cfg.get_double("gamma", 1.0);
    sum.setting("dimension", static_cast<double>(dim));
    sum.setting("gamma", gamma);
    auto ladder = doubling_ladder(cfg.get_double("ladder_start", 0.5),
                                  cfg.get_int("ladder_octaves", 13));
    GrowthReport rep = clumping_exponent(dim, gamma, ladder);
    write_growth_csv(rep, (fs::path(opt.out_dir) / "series.csv").string());

    double exp_tol = cfg.get_double("exponent_tolerance", 0.05) * (opt.strict ? 0.5 : 1.0);
    double log_tol = cfg.get_double("log_residual_tolerance", 0.05) * (opt.strict ? 0.5 : 1.0);
    sum.setting("exponent_tolerance", exp_tol);
    sum.setting("log_residual_tolerance", log_tol);
    sum.info("growth_exponent", fmt(rep.growth_exponent));
    sum.info("log_fit_residual", fmt(rep.log_fit_residual));
    sum.info("increment_ratio", fmt(rep.increment_ratio));

    if (gamma == 0.0) {
        double worst = 0.0;
        for (double v : rep.values)
            worst = std::max(worst, std::abs(v));
        sum.check("zero_rate", worst == 0.0, "max |E| = " + fmt(worst));
    } else if (dim == 1) {
        sum.check("sqrt_growth", std::abs(rep.growth_exponent - 0.5) <= exp_tol,
                  "exponent " + fmt(rep.growth_exponent) + ", expected 0.5 +- " + fmt(exp_tol));
    } else if (dim == 2) {
        sum.check("log_growth", rep.log_fit_residual <= log_tol && rep.log_fit_slope > 0.0,
                  "log-fit residual " + fmt(rep.log_fit_residual) + ", tolerance " +
                      fmt(log_tol));
    } else {
        sum.check("bounded", rep.verdict == GrowthVerdict::Converges,
                  "increment ratio " + fmt(rep.increment_ratio) + ", threshold 0.9");
    }
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

int cmd_sharpness(const KeyValueConfig& cfg, const Options& opt) {
    Summary sum("sharpness", opt);
    Grid g = load_grid(cfg, sum);
    RadialPotential pot = load_potential(cfg, g.dim, sum);
    KernelSpec kernel = load_kernel(cfg, pot, sum);
    PotentialIndices idx = compute_indices(pot, load_index_config(cfg));
    sum.info("c_w", fmt(idx.c_w));

    double c = cfg.get_double("rate_c", idx.c_w + 1.0);
    double height = cfg.get_double("height", 1.0);
    double forward_dt = cfg.get_double("forward_dt", 1e-3);
    sum.setting("rate_c", c);
    sum.setting("height", height);
    sum.setting("forward_dt", forward_dt);

    SharpnessResult res;
    try {
        res = sharpness_counterexample(g, kernel, c, {0, 0, 0}, height, idx);
    } catch (const ConstructionError& err) {
        sum.check("construction", false, err.what());
        sum.write(cfg);
        return 1;
    }
    {
        std::ofstream out(fs::path(opt.out_dir) / "attempts.csv");
        out << "epsilon,margin\n";
        for (auto [eps, margin] : res.attempts)
            out << fmt(eps) << "," << fmt(margin) << "\n";
    }
    write_binary(res.rho0, (fs::path(opt.out_dir) / "rho0.bin").string());
    sum.check("construction", res.margin > 0.0,
              "margin " + fmt(res.margin) + " at epsilon " + fmt(res.epsilon));

    SimConfig sim = load_sim(cfg, g, kernel, sum);
    auto fd = sharpness_forward_difference(res.rho0, sim, c, forward_dt);
    sum.check("forward_difference", fd.exceeds,
              "measured " + fmt(fd.measured) + " vs bound " + fmt(fd.bound) + ", margin " +
                  fmt(fd.margin));
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

BpsConfig load_bps(const KeyValueConfig& cfg, const Grid& g, const Options& opt, Summary& sum) {
    BpsConfig bps;
    bps.branch_rate = cfg.get_double("branch_rate", 0.5);
    bps.dt = cfg.get_double("bps_dt", cfg.get_double("dt", 0.01));
    bps.n0_scale = cfg.get_double("n0", 1000.0);
    bps.seed = opt.seed;
    bps.particle_cap = static_cast<std::size_t>(cfg.get_int("particle_cap", 20000));
    bps.immigration = parse_shape(cfg.get_string("immigration", "zero"), g);
    bps.mollify_radius = cfg.get_double("mollify_radius", g.spacing());
    if (cfg.get_bool("interaction", false)) {
        Summary scratch("potential", opt);
        bps.interaction = load_potential(cfg, g.dim, scratch);
    }
    sum.setting("branch_rate", bps.branch_rate);
    sum.setting("bps_dt", bps.dt);
    sum.setting("n0", bps.n0_scale);
    sum.setting("mollify_radius", bps.mollify_radius);
    sum.setting("interaction", cfg.get_bool("interaction", false) ? "on" : "off");
    return bps;
}

int cmd_particles(const KeyValueConfig& cfg, const Options& opt) {
    Summary sum("particles", opt);
    Grid g = load_grid(cfg, sum);
    BpsConfig bps = load_bps(cfg, g, opt, sum);
    double t_end = cfg.get_double("t_end", 1.0);
    double snapshot_interval = cfg.get_double("snapshot_interval", 0.0);
    Field rho0 = parse_shape(cfg.get_string("rho0", "zero"), g);

    ParticleEnsemble ens = make_ensemble(rho0, bps);
    long long steps = std::llround(t_end / bps.dt);
    long long snap_every =
        snapshot_interval <= 0.0
            ? steps
            : std::max<long long>(1, std::llround(snapshot_interval / bps.dt));

    std::ofstream mass_csv(fs::path(opt.out_dir) / "mass_series.csv");
    mass_csv << "t,count,mass\n";
    std::ofstream snap_csv(fs::path(opt.out_dir) / "snapshots.csv");
    snap_csv << "t";
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < g.dim; ++a)
        snap_csv << "," << names[a];
    snap_csv << "\n";
    auto snapshot = [&](const ParticleEnsemble& e) {
        for (const auto& p : e.positions) {
            snap_csv << fmt(e.time);
            for (int a = 0; a < g.dim; ++a)
                snap_csv << "," << fmt(p[static_cast<std::size_t>(a)]);
            snap_csv << "\n";
        }
    };
    mass_csv << fmt(ens.time) << "," << ens.count() << "," << fmt(ens.total_mass()) << "\n";
    snapshot(ens);
    try {
        for (long long k = 1; k <= steps; ++k) {
            ens = bps_step(std::move(ens), bps);
            mass_csv << fmt(ens.time) << "," << ens.count() << "," << fmt(ens.total_mass())
                     << "\n";
            if (k % snap_every == 0)
                snapshot(ens);
        }
    } catch (const NumericalHalt& halt) {
        sum.check("completed", false, halt.what());
        sum.write(cfg);
        return 3;
    }
    double expected = norms(rho0).l1 + t_end * norms(bps.immigration).l1;
    sum.info("final_mass", fmt(ens.total_mass()) + " (mean-field expectation " +
                               fmt(expected) + ", single replica)");
    sum.check("completed", true, "final count " + std::to_string(ens.count()));
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

int cmd_meanfield(const KeyValueConfig& cfg, const Options& opt) {
    Summary sum("meanfield", opt);
    Grid g = load_grid(cfg, sum);
    RadialPotential pot = load_potential(cfg, g.dim, sum);
    KernelSpec kernel = load_kernel(cfg, pot, sum);
    SimConfig sim = load_sim(cfg, g, kernel, sum);
    BpsConfig bps = load_bps(cfg, g, opt, sum);

    double t = cfg.get_double("compare_t", 1.0);
    int replicas = cfg.get_int("replicas", 16);
    double bandwidth = cfg.get_double("bandwidth", 2.0 * g.spacing());
    std::vector<double> ladder = cfg.has("n0_ladder")
                                     ? cfg.get_doubles("n0_ladder")
                                     : std::vector<double>{100, 1000, 10000};
    sum.setting("compare_t", t);
    sum.setting("replicas", static_cast<double>(replicas));
    sum.setting("bandwidth", bandwidth);

    MeanfieldReport rep =
        meanfield_compare(bps, sim, t, replicas, ladder, bandwidth, opt.threads);
    {
        std::ofstream out(fs::path(opt.out_dir) / "report.csv");
        out << "n0,l1_distance,replica_spread\n";
        for (std::size_t i = 0; i < rep.n0_ladder.size(); ++i)
            out << fmt(rep.n0_ladder[i]) << "," << fmt(rep.distances[i]) << ","
                << fmt(rep.replica_spread[i]) << "\n";
    }
    std::string dists;
    for (double d : rep.distances)
        dists += fmt(d) + " ";
    sum.check("monotone_decrease", rep.monotone, "distances: " + dists);
    if (cfg.get_bool("envelope_bound_check", false)) {
        double m_level = cfg.get_double("envelope_M", 1.0);
        double factor = cfg.get_double("envelope_bound_factor", 1.2);
        sum.check("particle_density_bound", rep.particle_max_density <= factor * m_level,
                  "max cell density " + fmt(rep.particle_max_density) + ", bound " +
                      fmt(factor * m_level));
    }
    sum.write(cfg);
    return sum.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rdlab: numerical laboratory for repulsion-diffusion dynamics with immigration"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "key = value configuration file")->required();
    app.add_option("--out", opt.out_dir, "output directory (default: current)");
    app.add_option("--seed", opt.seed, "random seed for stochastic experiments");
    app.add_option("--threads", opt.threads, "worker threads for replica sweeps");
    app.add_flag("--strict", opt.strict, "halve every tolerance");
    app.add_flag("--verbose", opt.verbose, "chatty progress output");

    app.fallthrough();
    const char* commands[] = {"analyze-potential", "simulate",  "envelope-check",
                              "maximum-principle", "dichotomy", "clumping",
                              "sharpness",         "particles", "meanfield"};
    for (const char* c : commands)
        app.add_subcommand(c)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }
    std::string command = app.get_subcommands().front()->get_name();

    try {
        auto cfg = KeyValueConfig::from_file(opt.config_path);
        fs::create_directories(opt.out_dir);
        if (command == "analyze-potential")
            return cmd_analyze_potential(cfg, opt);
        if (command == "simulate")
            return run_simulation_command(cfg, opt, "simulate");
        if (command == "envelope-check")
            return run_simulation_command(cfg, opt, "envelope-check");
        if (command == "maximum-principle")
            return run_simulation_command(cfg, opt, "maximum-principle");
        if (command == "dichotomy")
            return cmd_dichotomy(cfg, opt);
        if (command == "clumping")
            return cmd_clumping(cfg, opt);
        if (command == "sharpness")
            return cmd_sharpness(cfg, opt);
        if (command == "particles")
            return cmd_particles(cfg, opt);
        if (command == "meanfield")
            return cmd_meanfield(cfg, opt);
        std::cerr << "unknown command: " << command << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalHalt& e) {
        std::cerr << "numerical halt: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
