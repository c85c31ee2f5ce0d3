#include "rdlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace rdlab {

// ---------------------------------------------------------------------------
// Immigration

Immigration Immigration::none(const Grid& g) {
    Immigration f;
    f.base_ = Field(g);
    return f;
}

Immigration Immigration::constant(Field f) {
    if (min_value(f) < 0.0)
        throw ConfigError("immigration must be non-negative");
    Immigration out;
    auto n = norms(f);
    out.base_ = std::move(f);
    out.base_l1_ = n.l1;
    out.base_sup_ = n.sup;
    return out;
}

Immigration Immigration::time_dependent(std::function<Field(double)> family, const Grid& g) {
    Immigration out;
    out.base_ = Field(g);
    out.family_ = std::move(family);
    return out;
}

bool Immigration::is_zero() const {
    return is_constant() && base_l1_ == 0.0 && base_sup_ == 0.0;
}

Field Immigration::at(double t) const { return family_ ? family_(t) : base_; }

double Immigration::l1_rate(double t) const {
    return family_ ? norms(family_(t)).l1 : base_l1_;
}

double Immigration::sup(double t) const {
    return family_ ? norms(family_(t)).sup : base_sup_;
}

// ---------------------------------------------------------------------------
// SimConfig

void SimConfig::validate() const {
    if (!(dt > 0.0))
        throw ConfigError("dt must be positive");
    if (!(t_end >= dt))
        throw ConfigError("t_end must be at least dt");
    if (rho0.grid != immigration.grid())
        throw ConfigError("rho0 and immigration must share one grid");
    kernel.validate(rho0.grid);
    if (min_value(rho0) < 0.0)
        throw ConfigError("rho0 must be non-negative");
    if (!(cfl > 0.0) || cfl > 1.0)
        throw ConfigError("cfl must lie in (0, 1]");
}

// ---------------------------------------------------------------------------
// advection: unsplit conservative finite-volume upwind with minmod-limited
// antidiffusion. Fluxes for every axis are built from the same state, so the
// update commutes with the grid symmetries; a per-cell outflow scale-back
// keeps the scheme positivity-preserving at the configured CFL number while
// staying exactly conservative (a face flux is owned by its donor cell).

namespace {

inline double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0)
        return std::min(a, b);
    if (a < 0.0 && b < 0.0)
        return std::max(a, b);
    return 0.0;
}

struct AxisWalker {
    std::size_t stride;
    std::size_t block;
};

AxisWalker axis_walker(const Grid& g, int axis) {
    std::size_t stride = 1;
    for (int a = axis + 1; a < g.dim; ++a)
        stride *= static_cast<std::size_t>(g.n);
    return {stride, stride * static_cast<std::size_t>(g.n)};
}

void advect(Field& rho, const VectorField& v, double dt, double cfl, int max_substeps) {
    const Grid& g = rho.grid;
    const double h = g.spacing();
    const int n = g.n;
    const std::size_t total = rho.size();

    double vmax = 0.0; // l1 norm of the velocity vector, the unsplit CFL speed
    for (std::size_t i = 0; i < total; ++i) {
        double s = 0.0;
        for (int a = 0; a < g.dim; ++a)
            s += std::abs(v.comp[static_cast<std::size_t>(a)][i]);
        vmax = std::max(vmax, s);
    }
    if (vmax == 0.0)
        return;
    int nsub = static_cast<int>(std::ceil(dt * vmax / (cfl * h)));
    nsub = std::max(nsub, 1);
    if (nsub > max_substeps)
        throw StiffnessError("advection needs " + std::to_string(nsub) +
                             " sub-steps (max " + std::to_string(max_substeps) +
                             "); velocity too stiff for the step size");
    const double dtau = dt / nsub;
    const double lam = dtau / h;

    std::vector<std::vector<double>> flux(static_cast<std::size_t>(g.dim),
                                          std::vector<double>(total));
    std::vector<double> scale(total);
    std::vector<double> divflux(total);

    for (int sub = 0; sub < nsub; ++sub) {
        for (int a = 0; a < g.dim; ++a) {
            auto wk = axis_walker(g, a);
            auto& fl = flux[static_cast<std::size_t>(a)];
            const auto& va = v.comp[static_cast<std::size_t>(a)].values;
            for (std::size_t base = 0; base < total; base += wk.block) {
                for (std::size_t off = 0; off < wk.stride; ++off) {
                    auto cell = [&](int j) -> std::size_t {
                        int jj = j % n;
                        if (jj < 0)
                            jj += n;
                        return base + off + static_cast<std::size_t>(jj) * wk.stride;
                    };
                    for (int j = 0; j < n; ++j) {
                        std::size_t c0 = cell(j);
                        std::size_t c1 = cell(j + 1);
                        double vf = 0.5 * (va[c0] + va[c1]);
                        double dc = rho[c1] - rho[c0];
                        double f;
                        if (vf >= 0.0) {
                            double dup = rho[c0] - rho[cell(j - 1)];
                            f = vf * rho[c0] +
                                0.5 * vf * (1.0 - vf * lam) * minmod(dup, dc);
                        } else {
                            double dup = rho[cell(j + 2)] - rho[c1];
                            f = vf * rho[c1] -
                                0.5 * vf * (1.0 + vf * lam) * minmod(dup, dc);
                        }
                        fl[c0] = f;
                    }
                }
            }
        }

        // positivity: cap each cell's total outflow at its current content
        std::fill(scale.begin(), scale.end(), 1.0);
        bool any_capped = false;
        for (int a = 0; a < g.dim; ++a) {
            auto wk = axis_walker(g, a);
            const auto& fl = flux[static_cast<std::size_t>(a)];
            for (std::size_t base = 0; base < total; base += wk.block) {
                for (std::size_t off = 0; off < wk.stride; ++off) {
                    for (int j = 0; j < n; ++j) {
                        std::size_t c0 = base + off + static_cast<std::size_t>(j) * wk.stride;
                        std::size_t cp =
                            base + off +
                            static_cast<std::size_t>((j + n - 1) % n) * wk.stride;
                        double out = std::max(fl[c0], 0.0) + std::max(-fl[cp], 0.0);
                        if (out > 0.0)
                            scale[c0] += out; // reuse as accumulator, shifted by 1
                    }
                }
            }
        }
        for (std::size_t i = 0; i < total; ++i) {
            double out = (scale[i] - 1.0) * lam;
            if (out > std::max(rho[i], 0.0)) {
                scale[i] = std::max(rho[i], 0.0) * (1.0 - 1e-12) / out;
                any_capped = true;
            } else {
                scale[i] = 1.0;
            }
        }
        if (any_capped) {
            for (int a = 0; a < g.dim; ++a) {
                auto wk = axis_walker(g, a);
                auto& fl = flux[static_cast<std::size_t>(a)];
                for (std::size_t base = 0; base < total; base += wk.block) {
                    for (std::size_t off = 0; off < wk.stride; ++off) {
                        for (int j = 0; j < n; ++j) {
                            std::size_t c0 =
                                base + off + static_cast<std::size_t>(j) * wk.stride;
                            std::size_t c1 =
                                base + off +
                                static_cast<std::size_t>((j + 1) % n) * wk.stride;
                            fl[c0] *= fl[c0] >= 0.0 ? scale[c0] : scale[c1];
                        }
                    }
                }
            }
        }

        std::fill(divflux.begin(), divflux.end(), 0.0);
        for (int a = 0; a < g.dim; ++a) {
            auto wk = axis_walker(g, a);
            const auto& fl = flux[static_cast<std::size_t>(a)];
            for (std::size_t base = 0; base < total; base += wk.block) {
                for (std::size_t off = 0; off < wk.stride; ++off) {
                    for (int j = 0; j < n; ++j) {
                        std::size_t c0 = base + off + static_cast<std::size_t>(j) * wk.stride;
                        std::size_t cp =
                            base + off +
                            static_cast<std::size_t>((j + n - 1) % n) * wk.stride;
                        divflux[c0] += fl[c0] - fl[cp];
                    }
                }
            }
        }
        for (std::size_t i = 0; i < total; ++i)
            rho[i] -= lam * divflux[i];
    }
}

} // namespace

Field step_splitting(const Field& rho, const SimConfig& cfg, const InteractionOperator& op,
                     double t) {
    VectorField v = op.velocity(rho); // frozen from the pre-step density
    Field out = heat_step(rho, 0.5 * cfg.dt);
    advect(out, v, cfg.dt, cfg.cfl, cfg.max_substeps);
    if (!cfg.immigration.is_zero()) {
        if (cfg.immigration.is_constant()) {
            out.add_scaled(cfg.immigration.base(), cfg.dt);
        } else {
            Field f_mid = cfg.immigration.at(t + 0.5 * cfg.dt);
            out.add_scaled(f_mid, cfg.dt);
        }
    }
    return heat_step(out, 0.5 * cfg.dt);
}

Diagnostics run(const SimConfig& cfg) {
    cfg.validate();
    const Grid& g = cfg.rho0.grid;
    InteractionOperator op(g, cfg.kernel);

    Diagnostics diag;
    Field rho = cfg.rho0;
    auto n0 = norms(rho);
    diag.initial_l1 = n0.l1;
    diag.immigration_l1 = cfg.immigration.is_constant() ? cfg.immigration.l1_rate(0.0) : 0.0;

    const double blowup_threshold = cfg.blowup_factor * std::max(n0.sup, 1.0);
    const long long steps = std::llround(cfg.t_end / cfg.dt);
    const long long record_every =
        cfg.record_interval <= 0.0
            ? 1
            : std::max<long long>(1, std::llround(cfg.record_interval / cfg.dt));

    double source_mass = 0.0; // mass added by the discrete source so far
    auto record = [&](double t) {
        auto nn = norms(rho);
        diag.times.push_back(t);
        diag.sup_norm.push_back(nn.sup);
        diag.l1_mass.push_back(nn.l1);
        diag.argmax.push_back(nn.argmax);
        diag.envelope.push_back(std::numeric_limits<double>::quiet_NaN());
        double residual = std::abs(nn.l1 - (diag.initial_l1 + source_mass));
        diag.mass_residual.push_back(residual);
        diag.max_mass_residual = std::max(diag.max_mass_residual, residual);
        diag.max_boundary_ratio = std::max(diag.max_boundary_ratio, boundary_density_ratio(rho));
    };
    record(0.0);

    for (long long k = 1; k <= steps; ++k) {
        double t = (k - 1) * cfg.dt;
        try {
            rho = step_splitting(rho, cfg, op, t);
        } catch (const NumericalHalt& halt) {
            diag.halted = true;
            diag.halt_reason = halt.what();
            record(t);
            break;
        }
        source_mass = cfg.immigration.is_constant()
                          ? static_cast<double>(k) * cfg.dt * diag.immigration_l1
                          : source_mass + cfg.dt * cfg.immigration.l1_rate(t + 0.5 * cfg.dt);

        auto nn = norms(rho);
        double floor_t = -cfg.positivity_tolerance * std::max(nn.sup, 1e-300);
        double mn = min_value(rho);
        diag.worst_negative = std::min(diag.worst_negative, mn);
        if (mn < floor_t) {
            diag.halted = true;
            diag.halt_reason = "positivity violated: min " + std::to_string(mn) +
                               " below tolerance " + std::to_string(floor_t);
            record(k * cfg.dt);
            break;
        }
        if (mn < 0.0) {
            // sub-tolerance ringing from the exact spectral diffusion; project
            // back onto the non-negative cone so it cannot accumulate
            for (auto& v : rho.values)
                v = std::max(v, 0.0);
        }
        if (nn.sup > blowup_threshold) {
            diag.blowup = true;
            diag.halted = true;
            diag.halt_reason = "sup-norm blowup threshold reached";
            record(k * cfg.dt);
            break;
        }
        if (k % record_every == 0 || k == steps)
            record(k * cfg.dt);
    }
    diag.final_state = std::move(rho);
    return diag;
}

void write_diagnostics_csv(const Diagnostics& diag, const Grid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    out << "t,sup,l1";
    const char* names[3] = {"argmax_x", "argmax_y", "argmax_z"};
    for (int a = 0; a < g.dim; ++a)
        out << "," << names[a];
    out << ",envelope,mass_residual\n";
    char buf[80];
    for (std::size_t i = 0; i < diag.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", diag.times[i], diag.sup_norm[i],
                      diag.l1_mass[i]);
        out << buf;
        for (int a = 0; a < g.dim; ++a) {
            std::snprintf(buf, sizeof buf, ",%.17g", g.coord(diag.argmax[i][a]));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", diag.envelope[i],
                      diag.mass_residual[i]);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Picard fixed point of the integral formulation

PicardResult picard_solve(const SimConfig& cfg, double T, int iterations, int time_nodes) {
    cfg.validate();
    if (!(T > 0.0))
        throw ConfigError("picard_solve: T must be positive");
    if (iterations < 1)
        throw ConfigError("picard_solve: need at least one iteration");
    const Grid& g = cfg.rho0.grid;
    InteractionOperator op(g, cfg.kernel);

    const int J = std::max(32, time_nodes);
    const double dtau = T / J;
    const std::size_t total = g.cell_count();

    // per-mode |k|^2 and the odd derivative wavenumbers
    auto kline = fft::wavenumbers(g, false);
    auto kodd_line = fft::wavenumbers(g, true);
    std::vector<double> ksq(total);
    std::vector<std::array<double, 3>> kvec(total);
    {
        std::array<int, 3> idx{0, 0, 0};
        for (std::size_t m = 0; m < total; ++m) {
            double s = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                double ka = kline[static_cast<std::size_t>(idx[a])];
                s += ka * ka;
                kvec[m][static_cast<std::size_t>(a)] = kodd_line[static_cast<std::size_t>(idx[a])];
            }
            ksq[m] = s;
            for (int a = g.dim - 1; a >= 0; --a) {
                if (++idx[a] < g.n)
                    break;
                idx[a] = 0;
            }
        }
    }

    // base term: G_t * rho0 + int_0^t G_s * f ds, exact per mode for constant f
    Spectrum rho0_hat = fft::forward(cfg.rho0);
    std::vector<Spectrum> f_hat_nodes;
    Spectrum f_hat;
    if (cfg.immigration.is_constant()) {
        f_hat = fft::forward(cfg.immigration.base());
    } else {
        f_hat_nodes.reserve(static_cast<std::size_t>(J) + 1);
        for (int j = 0; j <= J; ++j)
            f_hat_nodes.push_back(fft::forward(cfg.immigration.at(j * dtau)));
    }
    auto base_at = [&](int j) {
        Spectrum b;
        b.grid = g;
        b.modes.resize(total);
        double t = j * dtau;
        for (std::size_t m = 0; m < total; ++m) {
            double decay = std::exp(-0.5 * t * ksq[m]);
            std::complex<double> acc = decay * rho0_hat.modes[m];
            if (cfg.immigration.is_constant()) {
                double psi = ksq[m] == 0.0 ? t : (1.0 - decay) / (0.5 * ksq[m]);
                acc += psi * f_hat.modes[m];
            }
            b.modes[m] = acc;
        }
        if (!cfg.immigration.is_constant()) {
            for (int s = 0; s <= j; ++s) {
                double w = (s == 0 || s == j) ? 0.5 * dtau : dtau;
                if (j == 0)
                    w = 0.0;
                double lag = (j - s) * dtau;
                for (std::size_t m = 0; m < total; ++m)
                    b.modes[m] += w * std::exp(-0.5 * lag * ksq[m]) * f_hat_nodes
                        [static_cast<std::size_t>(s)].modes[m];
            }
        }
        return b;
    };
    std::vector<Spectrum> base;
    base.reserve(static_cast<std::size_t>(J) + 1);
    for (int j = 0; j <= J; ++j)
        base.push_back(base_at(j));

    auto nnorm = [&](const Field& a, const Field& b) {
        return sup_distance(a, b) + l1_distance(a, b);
    };

    std::vector<Field> iter(static_cast<std::size_t>(J) + 1, cfg.rho0);
    PicardResult res;
    double scale = norms(cfg.rho0).sup + cfg.immigration.sup(0.0) * T + 1e-30;
    double prev_dist = std::numeric_limits<double>::infinity();
    int growth_streak = 0;

    for (int it = 0; it < iterations; ++it) {
        // spectra of div(rho (grad W * rho)) at every node, before heat decay
        std::vector<std::vector<std::complex<double>>> div_u(
            static_cast<std::size_t>(J) + 1);
        for (int s = 0; s <= J; ++s) {
            const Field& rs = iter[static_cast<std::size_t>(s)];
            VectorField v = op.velocity(rs); // v = -(grad W * rho)
            std::vector<std::complex<double>> acc(total, {0.0, 0.0});
            for (int a = 0; a < g.dim; ++a) {
                Field ua = rs;
                for (std::size_t i = 0; i < total; ++i)
                    ua[i] *= -v.comp[static_cast<std::size_t>(a)][i];
                Spectrum ua_hat = fft::forward(ua);
                for (std::size_t m = 0; m < total; ++m)
                    acc[m] += std::complex<double>(0.0, kvec[m][static_cast<std::size_t>(a)]) *
                              ua_hat.modes[m];
            }
            div_u[static_cast<std::size_t>(s)] = std::move(acc);
        }

        double dist = 0.0;
        double dist_at_T = 0.0;
        std::vector<Field> next(static_cast<std::size_t>(J) + 1);
        for (int j = 0; j <= J; ++j) {
            Spectrum acc = base[static_cast<std::size_t>(j)];
            for (int s = 0; s <= j; ++s) {
                double w = (s == 0 || s == j) ? 0.5 * dtau : dtau;
                if (j == 0)
                    break;
                double lag = (j - s) * dtau;
                const auto& ds = div_u[static_cast<std::size_t>(s)];
                for (std::size_t m = 0; m < total; ++m)
                    acc.modes[m] += w * std::exp(-0.5 * lag * ksq[m]) * ds[m];
            }
            next[static_cast<std::size_t>(j)] = fft::inverse(acc);
            double dj = nnorm(next[static_cast<std::size_t>(j)], iter[static_cast<std::size_t>(j)]);
            dist = std::max(dist, dj);
            if (j == J)
                dist_at_T = sup_distance(next[static_cast<std::size_t>(j)],
                                         iter[static_cast<std::size_t>(j)]);
        }
        iter = std::move(next);
        res.iterate_distances.push_back(dist);
        res.aposteriori_error = dist_at_T;
        res.iterations_used = it + 1;

        if (std::isfinite(prev_dist) && prev_dist > 1e-13 * scale) {
            double ratio = dist / prev_dist;
            res.contraction_ratio = std::max(res.contraction_ratio, ratio);
            growth_streak = ratio > 1.0 ? growth_streak + 1 : 0;
            if (growth_streak >= 2)
                throw ContractionError(
                    "picard iteration diverges (measured ratio " + std::to_string(ratio) +
                        "); shorten T",
                    ratio);
        }
        prev_dist = dist;
        if (dist <= 1e-14 * scale)
            break;
    }
    res.converged = res.contraction_ratio < 1.0 ||
                    res.iterate_distances.back() <= 1e-10 * scale;
    res.field = iter[static_cast<std::size_t>(J)];
    return res;
}

} // namespace rdlab
