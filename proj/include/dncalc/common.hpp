#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dncalc {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad size, bad grid, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Operation is defined but not implemented for this configuration (e.g. d = 2 solver).
class Unsupported : public Error {
public:
    using Error::Error;
};

/// Two objects living on different grids were combined.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Negative-order operator or homogeneous norm applied to data with a nonzero mean.
class ZeroModeError : public Error {
public:
    ZeroModeError(const std::string& what, double mean_modulus)
        : Error(what), mean_modulus(mean_modulus) {}
    double mean_modulus;
};

/// Re<A eta, eta> failed to stay positive somewhere.
class EllipticityError : public Error {
public:
    EllipticityError(const std::string& what, std::vector<double> x, std::vector<cplx> eta,
                     double value)
        : Error(what), x(std::move(x)), eta(std::move(eta)), value(value) {}
    std::vector<double> x;
    std::vector<cplx> eta;
    double value;
};

/// An internal consistency check on a computed symbol failed.
class SymbolError : public Error {
public:
    SymbolError(const std::string& what, double residual) : Error(what), residual(residual) {}
    double residual;
};

/// The strip solve did not reach its residual target.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual, double condition_estimate)
        : Error(what), residual(residual), condition_estimate(condition_estimate) {}
    double residual;
    double condition_estimate;
};

/// Bad or inconsistent configuration. Line is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
    int line;
};

}  // namespace dncalc
