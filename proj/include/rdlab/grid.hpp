#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rdlab/errors.hpp"

namespace rdlab {

/// Uniform periodic grid on the box [-L, L)^d with n cells per axis.
/// Cell i along an axis sits at x = -L + i*h with h = 2L/n, so index 0 is the
/// box boundary and index n/2 is the origin.
struct Grid {
    int dim = 1;
    int n = 256;
    double half_width = 10.0;

    Grid() = default;
    Grid(int d, int points_per_axis, double L) : dim(d), n(points_per_axis), half_width(L) {
        validate();
    }

    void validate() const;

    double spacing() const { return 2.0 * half_width / n; }
    double cell_volume() const;
    std::size_t cell_count() const;

    double coord(int i) const { return -half_width + i * spacing(); }
    int wrap(int i) const {
        int m = i % n;
        return m < 0 ? m + n : m;
    }
    /// Displacement of cell index m interpreted as a periodic offset in [-L, L).
    double displacement(int m) const {
        return (m < n / 2 ? m : m - n) * spacing();
    }
    /// Shortest periodic representative of a physical displacement.
    double wrap_displacement(double dx) const;

    std::size_t flat(const std::array<int, 3>& idx) const {
        std::size_t f = 0;
        for (int a = 0; a < dim; ++a)
            f = f * n + static_cast<std::size_t>(idx[a]);
        return f;
    }
    std::array<int, 3> unflat(std::size_t f) const {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = dim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(f % n);
            f /= n;
        }
        return idx;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim == b.dim && a.n == b.n && a.half_width == b.half_width;
    }
    friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }
};

/// Scalar density sampled at cell centres.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0)
        : grid(g), values(g.cell_count(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double& at(const std::array<int, 3>& idx) { return values[grid.flat(idx)]; }
    double at(const std::array<int, 3>& idx) const { return values[grid.flat(idx)]; }
    std::size_t size() const { return values.size(); }

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);
    void add_scaled(const Field& other, double s);
};

/// One Field per spatial component.
struct VectorField {
    std::vector<Field> comp;

    VectorField() = default;
    explicit VectorField(const Grid& g) : comp(static_cast<std::size_t>(g.dim), Field(g)) {}
    const Grid& grid() const { return comp.front().grid; }
};

struct FieldNorms {
    double l1 = 0.0;                 ///< sum of values times cell volume
    double sup = 0.0;                ///< maximum value
    std::array<int, 3> argmax{0, 0, 0};
};

/// l1 = sum(values)*h^d, sup = max value, argmax = lexicographically smallest
/// maximising index.
FieldNorms norms(const Field& rho);

double min_value(const Field& rho);
double max_abs(const Field& rho);
double sup_distance(const Field& a, const Field& b);
double l1_distance(const Field& a, const Field& b);

/// Deviation from invariance under the grid symmetries (axis reflections
/// through the origin and, for d >= 2, axis swaps), relative to the sup norm.
double asymmetry(const Field& rho);

/// Max |rho| over the cells on the box boundary (any index component 0),
/// relative to the sup norm. Proxy for how much mass feels the torus topology.
double boundary_density_ratio(const Field& rho);

/// Flat binary snapshot: int32 d, int32 n, float64 L (little endian), then
/// n^d row-major float64 values.
void write_binary(const Field& rho, const std::string& path);
Field read_binary(const std::string& path);

/// Plain CSV with one row per cell: coordinates then value. Intended for
/// small grids only.
void write_csv(const Field& rho, const std::string& path);

} // namespace rdlab
