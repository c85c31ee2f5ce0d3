#pragma once

#include <complex>
#include <vector>

#include "rdlab/grid.hpp"

namespace rdlab {

/// Fourier modes of a field, in the same row-major layout as the field itself.
struct Spectrum {
    Grid grid;
    std::vector<std::complex<double>> modes;
};

namespace fft {

/// Signed wavenumber of mode m on an axis: k = (pi/L)*m for m <= n/2 and
/// (pi/L)*(m-n) above. With zero_nyquist the m = n/2 entry is zeroed, which is
/// the right convention for odd (derivative) multipliers on real data.
std::vector<double> wavenumbers(const Grid& g, bool zero_nyquist);

/// Forward DFT along every axis (no normalisation).
Spectrum forward(const Field& f);

/// Inverse DFT (normalised by 1/n^d), real part.
Field inverse(const Spectrum& s);

/// In-place complex radix-2 transform of a single strided line.
void transform_line(std::complex<double>* data, int n, int stride, bool inverse);

} // namespace fft
} // namespace rdlab
