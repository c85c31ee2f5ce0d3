#include "rdlab/fft.hpp"

#include <cmath>
#include <numbers>

namespace rdlab {
namespace fft {

std::vector<double> wavenumbers(const Grid& g, bool zero_nyquist) {
    std::vector<double> k(static_cast<std::size_t>(g.n));
    double k0 = std::numbers::pi / g.half_width;
    for (int m = 0; m < g.n; ++m) {
        int signed_m = m <= g.n / 2 ? m : m - g.n;
        k[static_cast<std::size_t>(m)] = k0 * signed_m;
    }
    if (zero_nyquist)
        k[static_cast<std::size_t>(g.n / 2)] = 0.0;
    return k;
}

void transform_line(std::complex<double>* data, int n, int stride, bool inverse) {
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(data[static_cast<std::size_t>(i) * stride],
                      data[static_cast<std::size_t>(j) * stride]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                auto& u = data[static_cast<std::size_t>(i + j) * stride];
                auto& v = data[static_cast<std::size_t>(i + j + len / 2) * stride];
                std::complex<double> t = v * w;
                v = u - t;
                u = u + t;
                w *= wlen;
            }
        }
    }
}

namespace {

void transform_all_axes(Spectrum& s, bool inverse) {
    const Grid& g = s.grid;
    const int n = g.n;
    const std::size_t total = g.cell_count();
    // Row-major layout: axis d-1 has stride 1, axis a has stride n^(d-1-a).
    for (int axis = 0; axis < g.dim; ++axis) {
        std::size_t stride = 1;
        for (int a = axis + 1; a < g.dim; ++a)
            stride *= static_cast<std::size_t>(n);
        std::size_t block = stride * static_cast<std::size_t>(n);
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off)
                transform_line(s.modes.data() + base + off, n, static_cast<int>(stride),
                               inverse);
        }
    }
    if (inverse) {
        double norm = 1.0 / static_cast<double>(total);
        for (auto& m : s.modes)
            m *= norm;
    }
}

} // namespace

Spectrum forward(const Field& f) {
    Spectrum s;
    s.grid = f.grid;
    s.modes.assign(f.values.begin(), f.values.end());
    transform_all_axes(s, false);
    return s;
}

Field inverse(const Spectrum& s) {
    Spectrum work = s;
    transform_all_axes(work, true);
    Field f(s.grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = work.modes[i].real();
    return f;
}

} // namespace fft
} // namespace rdlab
