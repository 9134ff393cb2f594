#pragma once

#include <stdexcept>

namespace collective {

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map categories to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or configuration invariant is violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative solver or quadrature did not reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A complex exponential would leave double-precision range.
class OverflowError : public Error {
public:
    using Error::Error;
};

}  // namespace collective
