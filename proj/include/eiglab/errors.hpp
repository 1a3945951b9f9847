#pragma once

#include <stdexcept>
#include <string>

namespace eiglab {

// Base class for all library failures. CLI maps these to exit code 1,
// except ConfigError which maps to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// An eigenvalue sits closer to the imaginary axis than the configured floor.
class HyperbolicityError : public Error {
public:
    using Error::Error;
};

// Stable and unstable invariant subspaces fail the orthogonality check.
class OrthogonalityError : public Error {
public:
    using Error::Error;
};

// A structural constraint on the inputs is violated (for example the
// weight matrix of a Lyapunov block does not dominate 2*Id).
class ConstraintError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefiniteError : public Error {
public:
    using Error::Error;
};

// Torus frequencies admit an integer relation, or fail the small-divisor
// bound required of an irrational winding.
class RationalityError : public Error {
public:
    using Error::Error;
};

// Matrix spectrum lies on the wrong side for a convergent Gramian integral.
class DivergentIntegralError : public Error {
public:
    using Error::Error;
};

// An iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Configuration parse or validation failure; CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace eiglab
