#pragma once

#include <stdexcept>
#include <string>

namespace lpsim {

/// Base for every error raised by the library. The CLI maps the derived
/// types onto exit codes (config 2, convergence 3, everything else 1).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// First-sheet self-energy requested on the continuum cut.
class BranchCutError : public DomainError {
public:
    using DomainError::DomainError;
};

class UnsupportedContinuation : public Error {
public:
    using Error::Error;
};

class KernelConstraintError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class UndefinedAgeError : public DomainError {
public:
    using DomainError::DomainError;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A finite-time approximant to a strong limit failed its T vs T/2 test.
class LimitNotReached : public ConvergenceError {
public:
    LimitNotReached(const std::string& what, double gap)
        : ConvergenceError(what), gap_(gap) {}
    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace lpsim
