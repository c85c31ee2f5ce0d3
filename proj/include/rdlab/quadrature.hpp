#pragma once

#include <functional>
#include <vector>

#include "rdlab/errors.hpp"

namespace rdlab {

struct QuadResult {
    double value = 0.0;
    double error = 0.0; ///< absolute error estimate
};

/// Adaptive Gauss-Kronrod 7-15 on [a, b]. Throws QuadratureError with the
/// failing sub-interval if the tolerance cannot be met within max_depth
/// bisection levels.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol = 1e-10, double abs_tol = 1e-14,
                              int max_depth = 40);

/// Bisection root of f between a and b (f(a) and f(b) of opposite sign).
double find_sign_change(const std::function<double(double)>& f, double a, double b,
                        double x_tol = 1e-13);

struct LimitEstimate {
    double value = 0.0;
    double error = 0.0;
    bool diverged = false;
    bool increasing = false; ///< direction of the divergence, when diverged
};

/// Limit of a sequence sampled on a geometric ladder. Uses iterated Aitken
/// extrapolation, which removes geometric error terms of unknown rate; the
/// reported error combines the last extrapolation update with the residual of
/// the raw tail. Divergence is declared when |x| exceeds divergence_threshold
/// while still moving away over the last three rungs, or when the increments
/// themselves grow geometrically.
LimitEstimate extrapolate_limit(const std::vector<double>& ladder,
                                double divergence_threshold = 1e6);

struct PowerFit {
    double exponent = 0.0;
    double log_prefactor = 0.0;
    double residual = 0.0; ///< rms of log-residuals
};

/// Least-squares fit of values ~ C * t^p on log-log axes.
PowerFit fit_power(const std::vector<double>& t, const std::vector<double>& v);

struct LogFit {
    double offset = 0.0;
    double slope = 0.0;     ///< coefficient of log t
    double rel_residual = 0.0; ///< rms residual over mean |value|
};

/// Least-squares fit of values ~ a + b log t.
LogFit fit_log(const std::vector<double>& t, const std::vector<double>& v);

} // namespace rdlab
