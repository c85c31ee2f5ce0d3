#pragma once

#include <stdexcept>
#include <string>

namespace rdlab {

/// Malformed configuration or inconsistent run parameters (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical guard tripped and the computation stopped (CLI exit code 3).
class NumericalHalt : public std::runtime_error {
public:
    explicit NumericalHalt(const std::string& what) : std::runtime_error(what) {}
};

/// Advection sub-cycling exceeded the configured sub-step budget.
class StiffnessError : public NumericalHalt {
public:
    explicit StiffnessError(const std::string& what) : NumericalHalt(what) {}
};

/// A field dipped below the positivity tolerance.
class PositivityError : public NumericalHalt {
public:
    explicit PositivityError(const std::string& what) : NumericalHalt(what) {}
};

/// Fixed-point iteration diverged; carries the measured growth ratio.
class ContractionError : public NumericalHalt {
public:
    ContractionError(const std::string& what, double measured_ratio)
        : NumericalHalt(what), ratio(measured_ratio) {}
    double ratio;
};

/// Adaptive quadrature failed to converge; carries the offending sub-interval.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double a, double b)
        : std::runtime_error(what), interval_a(a), interval_b(b) {}
    double interval_a;
    double interval_b;
};

/// Counterexample construction exhausted its ladder; carries the best margin seen.
class ConstructionError : public std::runtime_error {
public:
    ConstructionError(const std::string& what, double best)
        : std::runtime_error(what), best_margin(best) {}
    double best_margin;
};

} // namespace rdlab
