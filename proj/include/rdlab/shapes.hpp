#pragma once

#include <array>
#include <string>

#include "rdlab/grid.hpp"

namespace rdlab {

Field make_zero(const Grid& g);
Field make_uniform(const Grid& g, double value);

/// mass * (2 pi sigma^2)^{-d/2} exp(-|x-c|^2 / (2 sigma^2)), sampled plainly
/// (callers keep sigma well inside the box).
Field make_gaussian(const Grid& g, double mass, double sigma,
                    std::array<double, 3> center = {0, 0, 0});

/// Smooth compactly supported bump of given peak height and support radius:
/// height * exp(1 - 1/(1 - u^2)), u = |x-c|/radius. The sampled profile is
/// band-limited with a two-cell Gaussian so that exact spectral diffusion of
/// it stays non-negative; the peak ends up a few percent under `height` (all
/// checks use measured norms).
Field make_bump(const Grid& g, double height, double radius,
                std::array<double, 3> center = {0, 0, 0});

/// Compact bump whose Laplacian vanishes at the peak (quartic leading order):
/// height * exp(-u^4/(1 - u^2)). Band-limited like make_bump.
Field make_flat_top_bump(const Grid& g, double height, double radius,
                         std::array<double, 3> center = {0, 0, 0});

/// Single-cell spike of the given height at the cell nearest to center.
Field make_spike(const Grid& g, double height, std::array<double, 3> center = {0, 0, 0});

/// Parses a one-line shape description: "zero", "uniform V",
/// "gaussian MASS SIGMA [CX CY CZ]", "bump H R [C...]", "flatbump H R [C...]",
/// "spike H [C...]", "file PATH" (binary snapshot).
Field parse_shape(const std::string& text, const Grid& g);

} // namespace rdlab
