#include "rdlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace rdlab {

void Grid::validate() const {
    if (dim < 1 || dim > 3)
        throw ConfigError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    if (n < 8 || (n & (n - 1)) != 0)
        throw ConfigError("grid points per axis must be a power of two >= 8, got " +
                          std::to_string(n));
    if (!(half_width > 0.0))
        throw ConfigError("grid half-width must be positive");
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a)
        v *= spacing();
    return v;
}

std::size_t Grid::cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim; ++a)
        c *= static_cast<std::size_t>(n);
    return c;
}

double Grid::wrap_displacement(double dx) const {
    double span = 2.0 * half_width;
    dx -= span * std::round(dx / span);
    if (dx < -half_width)
        dx += span;
    if (dx >= half_width)
        dx -= span;
    return dx;
}

Field& Field::operator+=(const Field& other) {
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] += other.values[i];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] -= other.values[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values)
        v *= s;
    return *this;
}

void Field::add_scaled(const Field& other, double s) {
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] += s * other.values[i];
}

FieldNorms norms(const Field& rho) {
    FieldNorms out;
    if (rho.values.empty())
        return out;
    double sum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < rho.values.size(); ++i) {
        sum += rho.values[i];
        if (rho.values[i] > best) { // strict: ties keep the smallest flat index
            best = rho.values[i];
            best_i = i;
        }
    }
    out.l1 = sum * rho.grid.cell_volume();
    out.sup = best;
    out.argmax = rho.grid.unflat(best_i);
    return out;
}

double min_value(const Field& rho) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : rho.values)
        m = std::min(m, v);
    return m;
}

double max_abs(const Field& rho) {
    double m = 0.0;
    for (double v : rho.values)
        m = std::max(m, std::abs(v));
    return m;
}

double sup_distance(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

double l1_distance(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        s += std::abs(a.values[i] - b.values[i]);
    return s * a.grid.cell_volume();
}

namespace {

// Index map of the reflection x -> -x along one axis (0 and n/2 are fixed).
inline int reflect_index(int i, int n) { return i == 0 ? 0 : n - i; }

double reflection_asymmetry(const Field& rho, int axis) {
    const Grid& g = rho.grid;
    double worst = 0.0;
    for (std::size_t f = 0; f < rho.size(); ++f) {
        auto idx = g.unflat(f);
        idx[axis] = reflect_index(idx[axis], g.n);
        worst = std::max(worst, std::abs(rho[f] - rho.at(idx)));
    }
    return worst;
}

double swap_asymmetry(const Field& rho, int a, int b) {
    const Grid& g = rho.grid;
    double worst = 0.0;
    for (std::size_t f = 0; f < rho.size(); ++f) {
        auto idx = g.unflat(f);
        std::swap(idx[a], idx[b]);
        worst = std::max(worst, std::abs(rho[f] - rho.at(idx)));
    }
    return worst;
}

} // namespace

double asymmetry(const Field& rho) {
    const Grid& g = rho.grid;
    double scale = max_abs(rho);
    if (scale == 0.0)
        return 0.0;
    double worst = 0.0;
    for (int a = 0; a < g.dim; ++a)
        worst = std::max(worst, reflection_asymmetry(rho, a));
    for (int a = 0; a < g.dim; ++a)
        for (int b = a + 1; b < g.dim; ++b)
            worst = std::max(worst, swap_asymmetry(rho, a, b));
    return worst / scale;
}

double boundary_density_ratio(const Field& rho) {
    const Grid& g = rho.grid;
    double scale = max_abs(rho);
    if (scale == 0.0)
        return 0.0;
    double worst = 0.0;
    for (std::size_t f = 0; f < rho.size(); ++f) {
        auto idx = g.unflat(f);
        bool boundary = false;
        for (int a = 0; a < g.dim; ++a)
            boundary = boundary || idx[a] == 0;
        if (boundary)
            worst = std::max(worst, std::abs(rho[f]));
    }
    return worst / scale;
}

void write_binary(const Field& rho, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    std::int32_t d = rho.grid.dim;
    std::int32_t n = rho.grid.n;
    double L = rho.grid.half_width;
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&L), sizeof L);
    out.write(reinterpret_cast<const char*>(rho.values.data()),
              static_cast<std::streamsize>(rho.values.size() * sizeof(double)));
    if (!out)
        throw ConfigError("short write to '" + path + "'");
}

Field read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::int32_t d = 0, n = 0;
    double L = 0.0;
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&L), sizeof L);
    if (!in)
        throw ConfigError("truncated field header in '" + path + "'");
    Grid g(d, n, L);
    Field rho(g);
    in.read(reinterpret_cast<char*>(rho.values.data()),
            static_cast<std::streamsize>(rho.values.size() * sizeof(double)));
    if (!in)
        throw ConfigError("truncated field payload in '" + path + "'");
    return rho;
}

void write_csv(const Field& rho, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    const Grid& g = rho.grid;
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < g.dim; ++a)
        out << names[a] << ",";
    out << "value\n";
    char buf[64];
    for (std::size_t f = 0; f < rho.size(); ++f) {
        auto idx = g.unflat(f);
        for (int a = 0; a < g.dim; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", g.coord(idx[a]));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", rho[f]);
        out << buf;
    }
}

} // namespace rdlab
