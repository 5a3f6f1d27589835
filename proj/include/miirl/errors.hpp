#pragma once

#include <stdexcept>
#include <string>

namespace miirl {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// An input violated a documented precondition (shape, probability mass,
// index range, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// An iterative routine hit its iteration cap before reaching tolerance.
// Carries the last residual so callers can report how close it got.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what + " (last residual " + std::to_string(last_residual) + ")"),
          last_residual_(last_residual) {}

    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

// A numerical failure (overflow, degenerate normalizer) that log-space
// stabilization could not absorb.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

}  // namespace miirl
