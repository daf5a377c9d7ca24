#pragma once

#include <stdexcept>
#include <string>

namespace opengossip {

/// Base of every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation needed at least one agent and the system was empty.
class EmptySystemError : public Error {
public:
    EmptySystemError() : Error("operation requires a non-empty system") {}
    explicit EmptySystemError(const std::string& what) : Error(what) {}
};

/// Argument outside the mathematical domain of an operation (e.g. a
/// departure map at n <= 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An exact moment map was requested for a departure policy that only has
/// variance bounds.
class UnsupportedPolicyError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration, rejected before any run.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Solver failure, unbounded quantity or similar numerical breakdown.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace opengossip
