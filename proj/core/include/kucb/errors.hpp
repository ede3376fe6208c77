#pragma once

#include <stdexcept>
#include <string>

namespace kucb {

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization or decomposition cannot be completed in floating point.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative solver stopped at its iteration cap; carries the last residual.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string &what, double residual)
        : NumericalError(what), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace kucb
