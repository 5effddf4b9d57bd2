#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mts {

// Subsystem levels in error payloads are 1-based (1 = slowest), matching the
// slow-to-fast numbering used throughout the formulas.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed user input: bad dimensions, bad scheme parameters, indefinite P/Q.
class InputError : public Error {
public:
    using Error::Error;
};

class DimensionError : public InputError {
public:
    DimensionError(std::size_t level, const std::string& what)
        : InputError("subsystem " + std::to_string(level) + ": " + what), level_(level) {}
    std::size_t level() const noexcept { return level_; }

private:
    std::size_t level_;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// Failures of the numerics themselves; the CLI maps all of these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class EvaluationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularityError : public NumericalError {
public:
    SingularityError(std::size_t level, double condition)
        : NumericalError("total derivative D_{x" + std::to_string(level) + "} f_" + std::to_string(level) +
                         " is singular (condition estimate " + std::to_string(condition) + ")"),
          level_(level),
          condition_(condition) {}
    SingularityError(std::size_t level, double condition, const std::string& context)
        : NumericalError("total derivative D_{x" + std::to_string(level) + "} f_" + std::to_string(level) +
                         " is singular (condition estimate " + std::to_string(condition) + "): " + context),
          level_(level),
          condition_(condition) {}
    std::size_t level() const noexcept { return level_; }
    double condition() const noexcept { return condition_; }

private:
    std::size_t level_;
    double condition_;
};

class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : NumericalError(what + " (last residual " + std::to_string(last_residual) + ")"),
          last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

class IntegrationError : public NumericalError {
public:
    IntegrationError(double time, const std::string& what)
        : NumericalError("at t=" + std::to_string(time) + ": " + what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace mts
