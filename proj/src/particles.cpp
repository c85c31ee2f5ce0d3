#include "rdlab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "rdlab/spectral.hpp"

namespace rdlab {

namespace {

double uniform01(std::mt19937_64& rng) {
    // (0, 1]: keeps log() in the Box-Muller draw finite
    return (static_cast<double>(rng()) + 1.0) * 0x1.0p-64;
}

double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t poisson_knuth(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0)
        return 0;
    double limit = std::exp(-mean);
    double p = 1.0;
    std::size_t k = 0;
    do {
        ++k;
        p *= uniform01(rng);
    } while (p > limit);
    return k - 1;
}

// cumulative cell weights for sampling positions from a non-negative field
struct CellSampler {
    const Grid* grid = nullptr;
    std::vector<double> cdf;
    double total = 0.0;

    explicit CellSampler(const Field& f) : grid(&f.grid) {
        cdf.resize(f.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            acc += std::max(f[i], 0.0);
            cdf[i] = acc;
        }
        total = acc;
    }

    std::array<double, 3> draw(std::mt19937_64& rng) const {
        double u = uniform01(rng) * total;
        std::size_t i = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        i = std::min(i, cdf.size() - 1);
        auto idx = grid->unflat(i);
        std::array<double, 3> x{0, 0, 0};
        double h = grid->spacing();
        for (int a = 0; a < grid->dim; ++a)
            x[static_cast<std::size_t>(a)] =
                grid->coord(idx[a]) + (uniform01(rng) - 0.5) * h;
        return x;
    }
};

double wrap_coord(double x, double L) {
    double span = 2.0 * L;
    x -= span * std::floor((x + L) / span);
    return x;
}

} // namespace

void BpsConfig::validate() const {
    if (!(dt > 0.0))
        throw ConfigError("bps dt must be positive");
    if (branch_rate < 0.0)
        throw ConfigError("branch rate must be non-negative");
    if (branch_rate * dt > 0.1)
        throw ConfigError("branch_rate * dt must stay below 0.1 (event probability per step)");
    if (!(n0_scale > 0.0))
        throw ConfigError("n0_scale must be positive");
    double mean = offspring_mean();
    if (std::abs(mean - 1.0) > 1e-12)
        throw ConfigError("offspring law must have mean one (critical branching), got mean " +
                          std::to_string(mean));
    double ptot = 0.0;
    for (auto [k, p] : offspring_law) {
        if (k < 0 || p < 0.0)
            throw ConfigError("offspring law entries need k >= 0 and p >= 0");
        ptot += p;
    }
    if (std::abs(ptot - 1.0) > 1e-12)
        throw ConfigError("offspring law probabilities must sum to one");
}

double BpsConfig::offspring_mean() const {
    double m = 0.0;
    for (auto [k, p] : offspring_law)
        m += k * p;
    return m;
}

ParticleEnsemble make_ensemble(const Field& rho0, const BpsConfig& cfg) {
    cfg.validate();
    ParticleEnsemble ens;
    ens.dim = rho0.grid.dim;
    ens.half_width = rho0.grid.half_width;
    ens.weight = 1.0 / cfg.n0_scale;
    ens.rng.seed(cfg.seed);
    double mass = norms(rho0).l1;
    auto count = static_cast<std::size_t>(std::llround(mass * cfg.n0_scale));
    if (count > 0) {
        CellSampler sampler(rho0);
        if (sampler.total <= 0.0)
            throw ConfigError("cannot sample an ensemble from a field without positive mass");
        ens.positions.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            ens.positions.push_back(sampler.draw(ens.rng));
    }
    return ens;
}

ParticleEnsemble bps_step(ParticleEnsemble ens, const BpsConfig& cfg) {
    const int d = ens.dim;
    const double L = ens.half_width;
    const double span = 2.0 * L;
    const std::size_t n = ens.positions.size();

    // pairwise drift from the pre-move configuration, mass-weighted so the
    // dense limit matches -(grad W * rho)
    std::vector<std::array<double, 3>> drift;
    if (cfg.interaction && n >= 2) {
        drift.assign(n, {0.0, 0.0, 0.0});
        const RadialPotential& w = *cfg.interaction;
        const double moll = cfg.mollify_radius;
        const double scale = ens.weight * cfg.dt;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double delta[3];
                double r2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    double dx = ens.positions[i][static_cast<std::size_t>(a)] -
                                ens.positions[j][static_cast<std::size_t>(a)];
                    dx -= span * std::round(dx / span);
                    delta[a] = dx;
                    r2 += dx * dx;
                }
                double r = std::sqrt(r2);
                if (r < 1e-14)
                    continue; // coincident pair: direction undefined, no force
                double w1 = r < moll ? w.radial_derivative(moll) * (r / moll)
                                     : w.radial_derivative(r);
                double f = -scale * w1 / r;
                for (int a = 0; a < d; ++a) {
                    drift[i][static_cast<std::size_t>(a)] += f * delta[a];
                    drift[j][static_cast<std::size_t>(a)] -= f * delta[a];
                }
            }
        }
    }

    const double sq = std::sqrt(cfg.dt);
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            double x = ens.positions[i][static_cast<std::size_t>(a)];
            if (!drift.empty())
                x += drift[i][static_cast<std::size_t>(a)];
            x += sq * normal01(ens.rng);
            ens.positions[i][static_cast<std::size_t>(a)] = wrap_coord(x, L);
        }
    }

    // critical branching: a particle is replaced by k offspring at its site
    if (cfg.branch_rate > 0.0) {
        std::vector<std::array<double, 3>> next;
        next.reserve(ens.positions.size());
        double pbranch = cfg.branch_rate * cfg.dt;
        for (const auto& pos : ens.positions) {
            if (uniform01(ens.rng) < pbranch) {
                double u = uniform01(ens.rng);
                double acc = 0.0;
                int kids = 0;
                for (auto [k, p] : cfg.offspring_law) {
                    acc += p;
                    if (u <= acc) {
                        kids = k;
                        break;
                    }
                }
                for (int c = 0; c < kids; ++c)
                    next.push_back(pos);
            } else {
                next.push_back(pos);
            }
        }
        ens.positions = std::move(next);
    }

    double imm_l1 = norms(cfg.immigration).l1;
    if (imm_l1 > 0.0) {
        std::size_t arrivals = poisson_knuth(ens.rng, imm_l1 * cfg.n0_scale * cfg.dt);
        if (arrivals > 0) {
            CellSampler sampler(cfg.immigration);
            for (std::size_t i = 0; i < arrivals; ++i)
                ens.positions.push_back(sampler.draw(ens.rng));
        }
    }

    ens.time += cfg.dt;
    if (ens.positions.size() > cfg.particle_cap)
        throw NumericalHalt("particle population " + std::to_string(ens.positions.size()) +
                            " exceeded the cap " + std::to_string(cfg.particle_cap));
    return ens;
}

Field empirical_density(const ParticleEnsemble& ens, const Grid& g, double bandwidth) {
    if (g.dim != ens.dim)
        throw ConfigError("empirical_density: grid dimension does not match the ensemble");
    if (bandwidth < g.spacing())
        throw ConfigError("empirical_density: bandwidth must be at least the grid spacing");
    Field deposit(g);
    if (ens.positions.empty())
        return deposit;
    const double h = g.spacing();
    const double amp = ens.weight / g.cell_volume();

    // cloud-in-cell deposit, then a spectral Gaussian blur of the bandwidth
    for (const auto& pos : ens.positions) {
        int base_idx[3] = {0, 0, 0};
        double frac[3] = {0, 0, 0};
        for (int a = 0; a < g.dim; ++a) {
            double c = (pos[static_cast<std::size_t>(a)] + g.half_width) / h;
            double fl = std::floor(c);
            base_idx[a] = static_cast<int>(fl);
            frac[a] = c - fl;
        }
        int corners = 1 << g.dim;
        for (int corner = 0; corner < corners; ++corner) {
            std::array<int, 3> idx{0, 0, 0};
            double wgt = 1.0;
            for (int a = 0; a < g.dim; ++a) {
                int hi = (corner >> a) & 1;
                idx[a] = g.wrap(base_idx[a] + hi);
                wgt *= hi ? frac[a] : 1.0 - frac[a];
            }
            deposit.at(idx) += amp * wgt;
        }
    }
    return gaussian_blur(deposit, bandwidth);
}

MeanfieldReport meanfield_compare(const BpsConfig& cfg, const SimConfig& sim, double t,
                                  int replicas, const std::vector<double>& n0_ladder,
                                  double bandwidth, int threads) {
    if (replicas < 1)
        throw ConfigError("meanfield_compare needs at least one replica");
    if (n0_ladder.empty())
        throw ConfigError("meanfield_compare needs a non-empty N0 ladder");

    SimConfig pde = sim;
    pde.t_end = t;
    Diagnostics diag = run(pde);
    if (diag.halted)
        throw NumericalHalt("PDE reference run halted: " + diag.halt_reason);
    // The kernel estimate targets G_bw * rho, so the reference is smoothed by
    // the same bandwidth; otherwise the fixed smoothing bias floors the
    // distance and the N0 ladder stops resolving the statistical error.
    Field reference = gaussian_blur(diag.final_state, bandwidth);

    MeanfieldReport rep;
    rep.pde_sup = norms(diag.final_state).sup;
    rep.n0_ladder = n0_ladder;

    const long long steps = std::llround(t / cfg.dt);
    for (std::size_t rung = 0; rung < n0_ladder.size(); ++rung) {
        BpsConfig rung_cfg = cfg;
        rung_cfg.n0_scale = n0_ladder[rung];

        std::vector<Field> densities(static_cast<std::size_t>(replicas));
        auto worker = [&](int rep_begin, int rep_end) {
            for (int r = rep_begin; r < rep_end; ++r) {
                BpsConfig local = rung_cfg;
                local.seed = cfg.seed + 1000003ULL * (rung + 1) + 7919ULL * r;
                ParticleEnsemble ens = make_ensemble(sim.rho0, local);
                for (long long k = 0; k < steps; ++k)
                    ens = bps_step(std::move(ens), local);
                densities[static_cast<std::size_t>(r)] =
                    empirical_density(ens, reference.grid, bandwidth);
            }
        };
        int nthreads = std::max(1, std::min(threads, replicas));
        if (nthreads == 1) {
            worker(0, replicas);
        } else {
            std::vector<std::thread> pool;
            int chunk = (replicas + nthreads - 1) / nthreads;
            for (int tix = 0; tix < nthreads; ++tix) {
                int b = tix * chunk;
                int e = std::min(replicas, b + chunk);
                if (b < e)
                    pool.emplace_back(worker, b, e);
            }
            for (auto& th : pool)
                th.join();
        }

        Field mean(reference.grid);
        for (const auto& dens : densities)
            mean += dens;
        mean *= 1.0 / replicas;
        rep.distances.push_back(l1_distance(mean, reference));

        double mdist = 0.0, m2 = 0.0;
        for (const auto& dens : densities) {
            double di = l1_distance(dens, reference);
            mdist += di;
            m2 += di * di;
        }
        mdist /= replicas;
        double var = std::max(0.0, m2 / replicas - mdist * mdist);
        rep.replica_spread.push_back(std::sqrt(var / std::max(1, replicas - 1)));
        if (rung + 1 == n0_ladder.size())
            rep.particle_max_density = norms(mean).sup;
    }

    rep.monotone = true;
    for (std::size_t i = 0; i + 1 < rep.distances.size(); ++i)
        rep.monotone = rep.monotone && rep.distances[i + 1] < rep.distances[i];
    return rep;
}

} // namespace rdlab
