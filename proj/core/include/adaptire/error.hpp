#pragma once

#include <stdexcept>
#include <string>

namespace adaptire {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside an operation's domain (non-finite values, violated preconditions).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Coefficient set that evaluates to a non-physical quantity at the requested point.
class CoefficientError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace adaptire
