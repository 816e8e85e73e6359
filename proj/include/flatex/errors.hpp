#pragma once

#include <stdexcept>
#include <string>

namespace flatex {

/// Raised when an input violates a documented precondition (bad spec, bad
/// config, separation not on the lattice). The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation cannot deliver a trustworthy number: solver
/// residual too large, flat band not found, finite-size test failed.
/// The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace flatex
