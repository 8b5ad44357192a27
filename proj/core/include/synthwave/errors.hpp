#pragma once

#include <stdexcept>
#include <string>

namespace synthwave {

// Error taxonomy shared by all engines. The CLI maps categories to exit
// codes: input errors -> 2, convergence/threshold -> 3, internal -> 4.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: unknown mode reference, bad leg count, schema violation.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Parameter outside its mathematical domain (negative photon number, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A requested mode contraction cannot be formed (dangling virtual leg).
class SynthesisError : public Error {
public:
    using Error::Error;
};

/// Vanishing elimination denominator.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Drive exceeds the parametric oscillation threshold.
class ThresholdError : public Error {
public:
    ThresholdError(const std::string& what, double gain_ratio)
        : Error(what), gain_ratio(gain_ratio) {}
    double gain_ratio;
};

/// Iteration failed to reach the requested residual.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace synthwave
