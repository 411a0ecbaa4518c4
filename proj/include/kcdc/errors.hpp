#pragma once

#include <stdexcept>
#include <string>

namespace kcdc {

// Base of every error the library raises. The CLI maps the two families
// below onto distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: dimension mismatch, violated parameter constraint, malformed config.
class ValidationError : public Error {
public:
    using Error::Error;
};

// State outside an observable's domain (e.g. a log of a non-positive density).
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Numerical failure during integration.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Kahan step whose linear system is singular or too ill-conditioned.
class StepFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

class NewtonFailure : public NumericalError {
public:
    NewtonFailure(const std::string& what, int iterations, double residual)
        : NumericalError(what), iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

} // namespace kcdc
