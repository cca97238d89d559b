#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace speclab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class SolvabilityError : public Error {
public:
    using Error::Error;
};

class DecompositionError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A condition of the estimate regime failed (denominator of phi_1 not positive, etc).
class RegimeError : public Error {
public:
    using Error::Error;
};

/// Non-finite state encountered while stepping.
class BlowUpError : public Error {
public:
    BlowUpError(std::int64_t step, double t)
        : Error("non-finite state at step " + std::to_string(step) + " (t = " + std::to_string(t) + ")"),
          step_(step), t_(t) {}
    std::int64_t step() const noexcept { return step_; }
    double time() const noexcept { return t_; }

private:
    std::int64_t step_;
    double t_;
};

} // namespace speclab
