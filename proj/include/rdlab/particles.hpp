#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rdlab/grid.hpp"
#include "rdlab/potential.hpp"
#include "rdlab/solver.hpp"

namespace rdlab {

/// Branching particle system state on the periodic box. Deterministic for a
/// fixed seed and single thread.
struct ParticleEnsemble {
    std::vector<std::array<double, 3>> positions; ///< first dim components used
    double weight = 1.0;  ///< mass per particle (1/N0 scale)
    double time = 0.0;
    int dim = 1;
    double half_width = 10.0;
    std::mt19937_64 rng;

    std::size_t count() const { return positions.size(); }
    double total_mass() const { return weight * static_cast<double>(positions.size()); }
};

struct BpsConfig {
    double branch_rate = 0.0;        ///< lambda
    std::vector<std::pair<int, double>> offspring_law = {{0, 0.5}, {2, 0.5}}; ///< mean one
    Field immigration;               ///< spatial immigration field (may be zero)
    std::optional<RadialPotential> interaction; ///< pairwise potential, absent = free
    double dt = 1e-2;
    double n0_scale = 1000.0;        ///< N0: particles per unit mass
    std::uint64_t seed = 1;
    std::size_t particle_cap = 20000;
    double mollify_radius = 0.0;     ///< pair force tapered inside this radius

    void validate() const;
    double offspring_mean() const;
};

/// Samples round(mass(rho0) * N0) particles from rho0; weight = 1/N0.
ParticleEnsemble make_ensemble(const Field& rho0, const BpsConfig& cfg);

/// One time step: pairwise drift (mass-weighted, mollified near coincidence)
/// plus Brownian increments of covariance dt*I, then critical branching at
/// rate lambda, then Poisson immigration sampled from f. Exceeding the
/// particle cap raises NumericalHalt.
ParticleEnsemble bps_step(ParticleEnsemble ens, const BpsConfig& cfg);

/// Gaussian kernel density estimate on the grid, mass-normalised to
/// weight * count. Cloud-in-cell deposit followed by a spectral Gaussian
/// blur of the given bandwidth (must be >= grid spacing).
Field empirical_density(const ParticleEnsemble& ens, const Grid& g, double bandwidth);

struct MeanfieldReport {
    std::vector<double> n0_ladder;
    std::vector<double> distances;     ///< replica-averaged L1 distance to the PDE field
    std::vector<double> replica_spread;///< std error of the distance per rung
    bool monotone = false;
    double pde_sup = 0.0;
    double particle_max_density = 0.0; ///< max cell of the last (largest N0) estimate
};

/// Runs `replicas` independent BPS copies per N0 rung to time t, compares the
/// averaged empirical density against the PDE solution (smoothed by the same
/// estimator bandwidth, the kernel estimate's actual target) in L1, and
/// checks the distance decreases along the ladder. Replica RNGs are seeded
/// from cfg.seed, the rung and the replica index, so results do not depend on
/// the thread count.
MeanfieldReport meanfield_compare(const BpsConfig& cfg, const SimConfig& sim, double t,
                                  int replicas, const std::vector<double>& n0_ladder,
                                  double bandwidth, int threads = 1);

} // namespace rdlab
